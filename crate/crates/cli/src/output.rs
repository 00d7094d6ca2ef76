//! CSV and JSON emission. Every CSV file starts with a `# schema: NAME/vN`
//! comment line; JSON documents carry the same string in a `schema` field.

use std::io::Write;
use std::path::Path;

use serde::Serialize;

use crate::args::Format;
use crate::error::CliResult;

pub fn csv_string<T: Serialize>(schema: &str, rows: &[T]) -> CliResult<String> {
    let mut buf = format!("# schema: {schema}\n").into_bytes();
    {
        let mut w = csv::Writer::from_writer(&mut buf);
        for row in rows {
            w.serialize(row)?;
        }
        w.flush()?;
    }
    Ok(String::from_utf8(buf).expect("csv output is UTF-8"))
}

/// Reads rows back from a file produced by [`csv_string`].
pub fn parse_csv<T: serde::de::DeserializeOwned>(text: &str) -> CliResult<(String, Vec<T>)> {
    let (first, body) = text.split_once('\n').unwrap_or((text, ""));
    let schema = first.strip_prefix("# schema: ").unwrap_or_default().to_owned();
    let rows = csv::Reader::from_reader(body.as_bytes()).deserialize().collect::<Result<Vec<T>, _>>()?;
    Ok((schema, rows))
}

pub fn json_string<T: Serialize>(value: &T) -> CliResult<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

/// Renders `rows` (CSV) or `document` (JSON) and writes to `out` or stdout.
pub fn emit<R: Serialize, D: Serialize>(
    format: Format,
    schema: &str,
    rows: &[R],
    document: &D,
    out: Option<&Path>,
) -> CliResult<()> {
    let text = match format {
        Format::Csv => csv_string(schema, rows)?,
        Format::Json => json_string(document)?,
    };
    write_text(&text, out)
}

pub fn write_text(text: &str, out: Option<&Path>) -> CliResult<()> {
    match out {
        Some(path) => std::fs::write(path, text)?,
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes())?;
            stdout.flush()?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use serde::Deserialize;

    use super::*;

    #[derive(Debug, PartialEq, Serialize, Deserialize)]
    struct Row {
        x: f64,
        flag: bool,
        step: Option<usize>,
    }

    #[test]
    fn csv_round_trip_keeps_schema_line() {
        let rows = vec![Row { x: 0.1, flag: true, step: None }, Row { x: 1e-17, flag: false, step: Some(3) }];
        let text = csv_string("test/v1", &rows).unwrap();
        assert!(text.starts_with("# schema: test/v1\nx,flag,step\n"));
        let (schema, back): (String, Vec<Row>) = parse_csv(&text).unwrap();
        assert_eq!(schema, "test/v1");
        assert_eq!(back, rows);
    }
}
