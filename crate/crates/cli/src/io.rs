//! Delimited-text readers and writers: prices, sector and event files, the
//! ingested return panel, epoch tables and single matrices.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use chrono::NaiveDate;
use marketstates_core::analysis::CrisisEvent;
use marketstates_core::epoch::EpochInfo;
use marketstates_core::ingest::{Asset, DropReport, PriceObservation, SectorAssignment, SectorMap};
use marketstates_core::{DMatrix, PriceTable, ReturnMatrix, Sector};

use crate::config::PriceSchema;
use crate::error::{CliError, Result};

/// Shortest text that parses back to the same `f64`.
pub fn fmt_f64(x: f64) -> String {
    let a = x.abs();
    if x == 0.0 || (1e-5..1e16).contains(&a) || !x.is_finite() {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

pub fn parse_f64(text: &str) -> Option<f64> {
    text.trim().parse().ok()
}

pub fn parse_date(text: &str) -> Option<NaiveDate> {
    NaiveDate::parse_from_str(text.trim(), "%Y-%m-%d").ok()
}

fn line_of(record: &csv::StringRecord) -> u64 {
    record.position().map_or(0, |p| p.line())
}

fn csv_error(path: &Path, err: csv::Error) -> CliError {
    let line = err.position().map(|p| format!(" line {}", p.line())).unwrap_or_default();
    CliError::data(format!("{}{line}: {err}", path.display()))
}

fn at_line(path: &Path, line: u64, message: impl std::fmt::Display) -> CliError {
    CliError::data(format!("{} line {line}: {message}", path.display()))
}

/// Opens a delimited file; `#` starts a comment line.
fn reader(path: &Path, delimiter: u8, headers: bool) -> Result<csv::Reader<File>> {
    let file = File::open(path).map_err(|e| CliError::io(path, e))?;
    Ok(csv::ReaderBuilder::new()
        .delimiter(delimiter)
        .has_headers(headers)
        .flexible(true)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(file))
}

pub fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    File::create(path).map(BufWriter::new).map_err(|e| CliError::io(path, e))
}

fn csv_writer(path: &Path) -> Result<csv::Writer<BufWriter<File>>> {
    Ok(csv::WriterBuilder::new().from_writer(create(path)?))
}

fn finish(path: &Path, writer: csv::Writer<BufWriter<File>>) -> Result<()> {
    writer
        .into_inner()
        .map_err(|e| CliError::data(format!("{}: {}", path.display(), e.error())))?
        .flush()
        .map_err(|e| CliError::io(path, e))
}

/// Writes rows of already formatted fields under `header`.
pub fn write_rows<I, R>(path: &Path, header: &[&str], rows: I) -> Result<()>
where
    I: IntoIterator<Item = R>,
    R: IntoIterator<Item = String>,
{
    let mut w = csv_writer(path)?;
    let werr = |e: csv::Error| CliError::data(format!("{}: {e}", path.display()));
    w.write_record(header).map_err(werr)?;
    for row in rows {
        w.write_record(row.into_iter().collect::<Vec<_>>()).map_err(werr)?;
    }
    finish(path, w)
}

/// A comma-separated table with a header row, addressed by column name.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub path: std::path::PathBuf,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn read(path: &Path) -> Result<Self> {
        let mut rdr = reader(path, b',', true)?;
        let header = rdr
            .headers()
            .map_err(|e| csv_error(path, e))?
            .iter()
            .map(str::to_string)
            .collect();
        let rows = rdr
            .records()
            .map(|r| {
                r.map(|r| r.iter().map(str::to_string).collect())
                    .map_err(|e| csv_error(path, e))
            })
            .collect::<Result<_>>()?;
        Ok(Self {
            path: path.to_path_buf(),
            header,
            rows,
        })
    }

    pub fn column(&self, name: &str) -> Result<usize> {
        self.header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| CliError::data(format!("{}: missing column `{name}`", self.path.display())))
    }

    /// Parses every value of a column; an empty field gives `None`.
    pub fn parse_column<T: std::str::FromStr>(&self, name: &str) -> Result<Vec<Option<T>>> {
        let c = self.column(name)?;
        self.rows
            .iter()
            .enumerate()
            .map(|(n, row)| match row.get(c).map(String::as_str) {
                None | Some("") => Ok(None),
                Some(text) => text
                    .parse()
                    .map(Some)
                    .map_err(|_| at_line(&self.path, n as u64 + 2, format!("bad {name} `{text}`"))),
            })
            .collect()
    }

    /// Like [`Table::parse_column`] but every field must be present.
    pub fn required<T: std::str::FromStr>(&self, name: &str) -> Result<Vec<T>> {
        self.parse_column(name)?
            .into_iter()
            .enumerate()
            .map(|(n, v)| v.ok_or_else(|| at_line(&self.path, n as u64 + 2, format!("empty {name}"))))
            .collect()
    }
}

/// Reads a long-format price file (one row per ticker and date).
pub fn read_prices(path: &Path, schema: &PriceSchema) -> Result<(PriceTable, DropReport)> {
    let mut rdr = reader(path, schema.delimiter_byte()?, true)?;
    let headers = rdr.headers().map_err(|e| csv_error(path, e))?.clone();
    let column = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| CliError::data(format!("{}: missing column `{name}`", path.display())))
    };
    let (ti, di, ci) = (column(&schema.ticker)?, column(&schema.date)?, column(&schema.close)?);
    let mut observations = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(|e| csv_error(path, e))?;
        let line = line_of(&record);
        let field = |i: usize, name: &str| {
            record
                .get(i)
                .filter(|s| !s.is_empty())
                .ok_or_else(|| at_line(path, line, format!("missing {name}")))
        };
        let ticker = field(ti, "ticker")?.to_string();
        let date_text = field(di, "date")?;
        let date = NaiveDate::parse_from_str(date_text, &schema.date_format)
            .map_err(|e| at_line(path, line, format!("bad date `{date_text}`: {e}")))?;
        let close_text = field(ci, "close")?;
        let close = parse_f64(close_text).ok_or_else(|| at_line(path, line, format!("bad price `{close_text}`")))?;
        observations.push(PriceObservation { ticker, date, close });
    }
    let (table, report) = PriceTable::from_observations(observations).map_err(|e| CliError::from(e).context(path.display()))?;
    Ok((table, report))
}

/// Reads `ticker,sector[,subsector]` lines; a first line starting with
/// `ticker` is taken as a header.
pub fn read_sectors(path: &Path) -> Result<SectorMap> {
    let mut rdr = reader(path, b',', false)?;
    let mut map = SectorMap::new();
    for (n, record) in rdr.records().enumerate() {
        let record = record.map_err(|e| csv_error(path, e))?;
        let line = line_of(&record);
        if n == 0 && record.get(0).is_some_and(|f| f.eq_ignore_ascii_case("ticker")) {
            continue;
        }
        let (Some(ticker), Some(code)) = (record.get(0), record.get(1)) else {
            return Err(at_line(path, line, "expected ticker,sector[,subsector]"));
        };
        if ticker.is_empty() || code.is_empty() {
            return Err(at_line(path, line, "empty ticker or sector"));
        }
        let subsector = record.get(2).filter(|s| !s.is_empty()).map(str::to_string);
        let entry = SectorAssignment {
            code: code.to_string(),
            subsector,
        };
        if map.insert(ticker.to_string(), entry).is_some() {
            return Err(at_line(path, line, format!("ticker {ticker} listed twice")));
        }
    }
    Ok(map)
}

/// Reads `date,name` event lines (ISO dates); an optional header is skipped.
pub fn read_events(path: &Path) -> Result<Vec<CrisisEvent>> {
    let mut rdr = reader(path, b',', false)?;
    let mut events = Vec::new();
    for (n, record) in rdr.records().enumerate() {
        let record = record.map_err(|e| csv_error(path, e))?;
        let line = line_of(&record);
        let (Some(date), Some(name)) = (record.get(0), record.get(1)) else {
            return Err(at_line(path, line, "expected date,name"));
        };
        match parse_date(date) {
            Some(date) => events.push(CrisisEvent {
                date,
                name: name.to_string(),
            }),
            None if n == 0 => continue,
            None => return Err(at_line(path, line, format!("bad date `{date}`"))),
        }
    }
    events.sort();
    Ok(events)
}

pub fn write_drop_report(path: &Path, report: &DropReport) -> Result<()> {
    write_rows(
        path,
        &["ticker", "missing_dates"],
        report.dropped.iter().map(|d| [d.ticker.clone(), d.missing_dates.to_string()]),
    )
}

/// `returns.csv`: one row per date, one column per ticker (in row order of
/// the sorted panel). `tickers.csv`: the row metadata.
pub fn write_returns(returns_path: &Path, tickers_path: &Path, returns: &ReturnMatrix) -> Result<()> {
    let mut header = vec!["date".to_string()];
    header.extend(returns.assets().iter().map(|a| a.ticker.clone()));
    let values = returns.values();
    let mut w = csv_writer(returns_path)?;
    let werr = |e: csv::Error| CliError::data(format!("{}: {e}", returns_path.display()));
    w.write_record(&header).map_err(werr)?;
    for (t, date) in returns.dates().iter().enumerate() {
        let mut row = vec![date.to_string()];
        row.extend(values.column(t).iter().map(|&x| fmt_f64(x)));
        w.write_record(&row).map_err(werr)?;
    }
    finish(returns_path, w)?;
    write_rows(
        tickers_path,
        &["row", "ticker", "sector", "subsector", "original_row"],
        returns.assets().iter().zip(returns.permutation()).enumerate().map(|(row, (a, &orig))| {
            [
                (row + 1).to_string(),
                a.ticker.clone(),
                a.sector.map(|s| s.code().to_string()).unwrap_or_default(),
                a.subsector.clone().unwrap_or_default(),
                (orig + 1).to_string(),
            ]
        }),
    )
}

/// Row metadata as written by [`write_returns`].
pub fn read_tickers(path: &Path) -> Result<(Vec<Asset>, Vec<usize>)> {
    let mut rdr = reader(path, b',', true)?;
    let mut assets = Vec::new();
    let mut permutation = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(|e| csv_error(path, e))?;
        let line = line_of(&record);
        if record.len() < 5 {
            return Err(at_line(path, line, "expected row,ticker,sector,subsector,original_row"));
        }
        let sector = match &record[2] {
            "" => None,
            code => Some(Sector::parse(code).ok_or_else(|| at_line(path, line, format!("unknown sector `{code}`")))?),
        };
        let original: usize = record[4]
            .parse()
            .ok()
            .filter(|&r| r >= 1)
            .ok_or_else(|| at_line(path, line, "bad original_row"))?;
        assets.push(Asset {
            ticker: record[1].to_string(),
            sector,
            subsector: Some(record[3].to_string()).filter(|s| !s.is_empty()),
        });
        permutation.push(original - 1);
    }
    Ok((assets, permutation))
}

pub fn read_returns(returns_path: &Path, tickers_path: &Path) -> Result<ReturnMatrix> {
    let (assets, permutation) = read_tickers(tickers_path)?;
    let mut rdr = reader(returns_path, b',', true)?;
    let headers = rdr.headers().map_err(|e| csv_error(returns_path, e))?.clone();
    let k = assets.len();
    if headers.len() != k + 1 || headers.iter().skip(1).zip(&assets).any(|(h, a)| h != a.ticker) {
        return Err(CliError::data(format!(
            "{}: columns do not match {}",
            returns_path.display(),
            tickers_path.display()
        )));
    }
    let mut dates = Vec::new();
    let mut data = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(|e| csv_error(returns_path, e))?;
        let line = line_of(&record);
        if record.len() != k + 1 {
            return Err(at_line(returns_path, line, format!("expected {} fields", k + 1)));
        }
        dates.push(parse_date(&record[0]).ok_or_else(|| at_line(returns_path, line, "bad date"))?);
        for field in record.iter().skip(1) {
            data.push(parse_f64(field).ok_or_else(|| at_line(returns_path, line, format!("bad value `{field}`")))?);
        }
    }
    // `data` is day after day, i.e. column-major for a K×T matrix.
    let values = DMatrix::from_vec(k, dates.len(), data);
    let returns = ReturnMatrix::new(values, assets, dates)?;
    Ok(returns.with_permutation(permutation)?)
}

pub fn write_epochs(path: &Path, infos: &[EpochInfo]) -> Result<()> {
    write_rows(
        path,
        &["epoch", "start_day", "length", "start_date", "end_date", "mid_date"],
        infos.iter().map(|e| {
            [
                e.index.to_string(),
                (e.start + 1).to_string(),
                e.length.to_string(),
                e.start_date.to_string(),
                e.end_date.to_string(),
                e.mid_date.to_string(),
            ]
        }),
    )
}

pub fn read_epochs(path: &Path) -> Result<Vec<EpochInfo>> {
    let mut rdr = reader(path, b',', true)?;
    let mut out = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(|e| csv_error(path, e))?;
        let line = line_of(&record);
        let bad = || at_line(path, line, "malformed epoch row");
        if record.len() != 6 {
            return Err(bad());
        }
        let num = |i: usize| record[i].parse::<usize>().map_err(|_| bad());
        let date = |i: usize| parse_date(&record[i]).ok_or_else(bad);
        out.push(EpochInfo {
            index: num(0)?,
            start: num(1)?.checked_sub(1).ok_or_else(bad)?,
            length: num(2)?,
            start_date: date(3)?,
            end_date: date(4)?,
            mid_date: date(5)?,
        });
    }
    Ok(out)
}

/// A square matrix with ticker labels on the first row and column.
pub fn write_matrix_csv(path: &Path, matrix: &DMatrix<f64>, labels: &[String]) -> Result<()> {
    if labels.len() != matrix.nrows() || !matrix.is_square() {
        return Err(CliError::data(format!(
            "{}: {} labels for a {}x{} matrix",
            path.display(),
            labels.len(),
            matrix.nrows(),
            matrix.ncols()
        )));
    }
    let mut header = vec![""];
    header.extend(labels.iter().map(String::as_str));
    write_rows(
        path,
        &header,
        (0..matrix.nrows()).map(|i| {
            std::iter::once(labels[i].clone())
                .chain(matrix.row(i).iter().map(|&x| fmt_f64(x)))
                .collect::<Vec<_>>()
        }),
    )
}

/// Reads a labelled square matrix written by [`write_matrix_csv`].
pub fn read_matrix_csv(path: &Path) -> Result<(Vec<String>, DMatrix<f64>)> {
    let mut rdr = reader(path, b',', true)?;
    let labels: Vec<String> = rdr
        .headers()
        .map_err(|e| csv_error(path, e))?
        .iter()
        .skip(1)
        .map(str::to_string)
        .collect();
    let k = labels.len();
    let mut data = Vec::with_capacity(k * k);
    let mut rows = 0;
    for record in rdr.records() {
        let record = record.map_err(|e| csv_error(path, e))?;
        let line = line_of(&record);
        if record.len() != k + 1 {
            return Err(at_line(path, line, format!("expected {} fields", k + 1)));
        }
        for field in record.iter().skip(1) {
            data.push(parse_f64(field).ok_or_else(|| at_line(path, line, format!("bad value `{field}`")))?);
        }
        rows += 1;
    }
    if rows != k {
        return Err(CliError::data(format!("{}: {rows} rows for {k} columns", path.display())));
    }
    Ok((labels, DMatrix::from_row_slice(k, k, &data)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn file(dir: &Path, name: &str, text: &str) -> std::path::PathBuf {
        let p = dir.join(name);
        std::fs::File::create(&p).unwrap().write_all(text.as_bytes()).unwrap();
        p
    }

    #[test]
    fn float_text_round_trips() {
        for x in [0.0, -0.0, 1.0, 0.1, -2.5e-7, 1e-300, 123456.789, 6.02e23, f64::MIN_POSITIVE, std::f64::consts::PI] {
            assert_eq!(parse_f64(&fmt_f64(x)).unwrap().to_bits(), x.to_bits(), "{x}");
        }
        assert_eq!(fmt_f64(0.25), "0.25");
    }

    #[test]
    fn prices_with_custom_schema() {
        let dir = tempfile::tempdir().unwrap();
        let p = file(
            dir.path(),
            "p.csv",
            "sym;day;adj\nA;02/01/2020;10\nB;02/01/2020;20\nA;03/01/2020;11\nA;06/01/2020;12\nB;06/01/2020;22\n",
        );
        let schema = PriceSchema {
            delimiter: ";".into(),
            ticker: "sym".into(),
            date: "day".into(),
            close: "adj".into(),
            date_format: "%d/%m/%Y".into(),
        };
        let (table, report) = read_prices(&p, &schema).unwrap();
        assert_eq!(table.tickers(), ["A"]);
        assert_eq!(table.dates().len(), 3);
        assert_eq!(report.dropped[0].ticker, "B");
    }

    #[test]
    fn malformed_price_rows_name_the_line() {
        let dir = tempfile::tempdir().unwrap();
        let p = file(dir.path(), "p.csv", "ticker,date,close\nA,2020-01-01,1\nA,2020-01-02,abc\n");
        let e = read_prices(&p, &PriceSchema::default()).unwrap_err();
        assert!(e.message.contains("line 3"), "{e}");
        assert_eq!(e.exit_code(), 2);
        let p = file(dir.path(), "q.csv", "ticker,date,close\nA,2020-01-01,1\nA,2020-01-02,-1\n");
        assert_eq!(read_prices(&p, &PriceSchema::default()).unwrap_err().exit_code(), 2);
        let p = file(dir.path(), "r.csv", "ticker,day,close\n");
        assert!(read_prices(&p, &PriceSchema::default()).unwrap_err().message.contains("`date`"));
    }

    #[test]
    fn sector_and_event_files() {
        let dir = tempfile::tempdir().unwrap();
        let s = file(dir.path(), "s.csv", "ticker,sector,subsector\n# comment\nA,IT,Software\nB,E\n");
        let map = read_sectors(&s).unwrap();
        assert_eq!(map["A"].subsector.as_deref(), Some("Software"));
        assert_eq!(map["B"].code, "E");
        let s = file(dir.path(), "t.csv", "A,IT\nA,E\n");
        assert!(read_sectors(&s).unwrap_err().message.contains("line 2"));
        let e = file(dir.path(), "e.csv", "date,name\n2008-09-15,Second\n2001-09-11,First\n");
        let events = read_events(&e).unwrap();
        assert_eq!(events[0].name, "First");
    }

    #[test]
    fn returns_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let d0 = NaiveDate::from_ymd_opt(2020, 1, 1).unwrap();
        let dates = vec![d0, d0.succ_opt().unwrap(), d0.succ_opt().unwrap().succ_opt().unwrap()];
        let assets = vec![
            Asset {
                ticker: "X".into(),
                sector: Some(Sector::Energy),
                subsector: Some("Oil, Gas".into()),
            },
            Asset {
                ticker: "Y".into(),
                sector: None,
                subsector: None,
            },
        ];
        let values = DMatrix::from_row_slice(2, 3, &[0.1, -1e-9, 0.3, 0.0, 2.0 / 3.0, -0.5]);
        let r = ReturnMatrix::new(values, assets, dates).unwrap().with_permutation(vec![1, 0]).unwrap();
        let (rp, tp) = (dir.path().join("r.csv"), dir.path().join("t.csv"));
        write_returns(&rp, &tp, &r).unwrap();
        let back = read_returns(&rp, &tp).unwrap();
        assert_eq!(back, r);
    }

    #[test]
    fn matrix_csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let m = DMatrix::from_row_slice(2, 2, &[1.0, -0.125, -0.125, 1.0]);
        let labels = vec!["A".to_string(), "B".to_string()];
        let p = dir.path().join("m.csv");
        write_matrix_csv(&p, &m, &labels).unwrap();
        assert_eq!(read_matrix_csv(&p).unwrap(), (labels.clone(), m.clone()));
        assert!(write_matrix_csv(&p, &m, &labels[..1]).is_err());
    }
}
