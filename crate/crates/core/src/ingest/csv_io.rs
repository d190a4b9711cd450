use std::path::Path;

use super::{IngestError, MeasurementRecord, MeasurementStore, Metric};

pub const CSV_HEADER: [&str; 6] = ["object_id", "source_id", "query_id", "year", "metric", "value"];

fn format_err(line: u64, message: impl Into<String>) -> IngestError {
    IngestError::CsvFormat { line, message: message.into() }
}

/// Parses measurement CSV text. Line numbers in errors are 1-based file
/// lines, the header being line 1.
pub fn parse_csv(text: &str) -> Result<Vec<MeasurementRecord>, IngestError> {
    Ok(parse_lines(text)?.into_iter().map(|(_, r)| r).collect())
}

fn parse_lines(text: &str) -> Result<Vec<(u64, MeasurementRecord)>, IngestError> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(text.as_bytes());
    let header = reader.headers().map_err(|e| format_err(1, e.to_string()))?.clone();
    if header.iter().map(str::trim).ne(CSV_HEADER) {
        return Err(format_err(1, format!("expected header {}", CSV_HEADER.join(","))));
    }

    let mut out = Vec::new();
    for row in reader.records() {
        let row = row.map_err(|e| {
            let line = e.position().map(|p| p.line()).unwrap_or(0);
            format_err(line, e.to_string())
        })?;
        let line = row.position().map(|p| p.line()).unwrap_or(0);
        if row.len() != CSV_HEADER.len() {
            return Err(format_err(line, format!("expected 6 fields, found {}", row.len())));
        }
        let field = |i: usize| row[i].trim();
        for (i, name) in CSV_HEADER.iter().enumerate().take(3) {
            if field(i).is_empty() {
                return Err(format_err(line, format!("{name} is empty")));
            }
        }
        let year: i32 = field(3).parse().map_err(|_| format_err(line, format!("bad year {:?}", field(3))))?;
        let metric: Metric = field(4).parse().map_err(|e: String| format_err(line, e))?;
        let value: f64 = field(5).parse().map_err(|_| format_err(line, format!("bad value {:?}", field(5))))?;
        if !value.is_finite() || value < 0.0 {
            return Err(IngestError::ValueRange { line, message: format!("value {value} must be a non-negative number") });
        }
        out.push((
            line,
            MeasurementRecord {
                object_id: field(0).to_string(),
                source_id: field(1).to_string(),
                query_id: field(2).to_string(),
                year,
                metric,
                value,
            },
        ));
    }
    Ok(out)
}

/// Serializes records in the given order. Values use the shortest
/// representation that reads back to the same `f64`.
pub fn write_csv<I>(records: I) -> Result<String, IngestError>
where
    I: IntoIterator<Item = MeasurementRecord>,
{
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    let io = |e: csv::Error| IngestError::Io(e.to_string());
    w.write_record(CSV_HEADER).map_err(io)?;
    for r in records {
        w.write_record([
            r.object_id.as_str(),
            r.source_id.as_str(),
            r.query_id.as_str(),
            &r.year.to_string(),
            r.metric.as_str(),
            &r.value.to_string(),
        ])
        .map_err(io)?;
    }
    let bytes = w.into_inner().map_err(|e| IngestError::Io(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

/// Loads a CSV file into the store atomically; returns the number of rows added.
pub fn ingest_csv(path: &Path, store: &mut MeasurementStore) -> Result<usize, IngestError> {
    let text = std::fs::read_to_string(path).map_err(|e| IngestError::Io(format!("{}: {e}", path.display())))?;
    let rows = parse_lines(&text)?;
    if let Some((lo, hi)) = store.window() {
        if let Some((line, r)) = rows.iter().find(|(_, r)| r.year < lo || r.year > hi) {
            return Err(IngestError::ValueRange {
                line: *line,
                message: format!("year {} outside observation window {lo}..={hi}", r.year),
            });
        }
    }
    store.insert_all(rows.into_iter().map(|(_, r)| r).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    const SIX: &str = "object_id,source_id,query_id,year,metric,value
phone,scholar,q1,2005,hit_count,2
phone,scholar,q2,2005,hit_count,4
phone,scholar,q3,2005,hit_count,8
phone,scholar,q1,2005,access_frequency,10
phone,scholar,q2,2005,access_frequency,20.5
phone,elibrary,q1,2006,citation_count,3
";

    fn file(text: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(text.as_bytes()).unwrap();
        f
    }

    #[test]
    fn six_valid_rows() {
        let f = file(SIX);
        let mut store = MeasurementStore::new();
        assert_eq!(ingest_csv(f.path(), &mut store).unwrap(), 6);
        assert_eq!(store.len(), 6);
    }

    #[test]
    fn negative_value_rejects_whole_file() {
        let text = SIX.replace("q2,2005,hit_count,4", "q2,2005,hit_count,-4");
        let f = file(&text);
        let mut store = MeasurementStore::new();
        assert_eq!(
            ingest_csv(f.path(), &mut store).unwrap_err(),
            IngestError::ValueRange { line: 3, message: "value -4 must be a non-negative number".into() }
        );
        assert!(store.is_empty());
    }

    #[test]
    fn reingest_is_duplicate() {
        let f = file(SIX);
        let mut store = MeasurementStore::new();
        ingest_csv(f.path(), &mut store).unwrap();
        let before = store.clone();
        assert!(matches!(ingest_csv(f.path(), &mut store), Err(IngestError::DuplicateKey(_))));
        assert_eq!(store, before);
    }

    #[test]
    fn format_errors_carry_lines() {
        let bad_metric = SIX.replace("citation_count", "likes");
        assert!(matches!(parse_csv(&bad_metric), Err(IngestError::CsvFormat { line: 7, .. })));
        let bad_year = SIX.replace("2006", "MMVI");
        assert!(matches!(parse_csv(&bad_year), Err(IngestError::CsvFormat { line: 7, .. })));
        let short = SIX.replace("phone,scholar,q3,2005,hit_count,8", "phone,scholar,q3,2005");
        assert!(matches!(parse_csv(&short), Err(IngestError::CsvFormat { line: 4, .. })));
        assert!(matches!(parse_csv("a,b\n1,2\n"), Err(IngestError::CsvFormat { line: 1, .. })));
    }

    #[test]
    fn window_violation_has_line() {
        let f = file(SIX);
        let mut store = MeasurementStore::with_window(2000, 2005);
        assert!(matches!(ingest_csv(f.path(), &mut store), Err(IngestError::ValueRange { line: 7, .. })));
        assert!(store.is_empty());
    }

    #[test]
    fn write_then_parse() {
        let recs = parse_csv(SIX).unwrap();
        assert_eq!(parse_csv(&write_csv(recs.clone()).unwrap()).unwrap(), recs);
    }
}
