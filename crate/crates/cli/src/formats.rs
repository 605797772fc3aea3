//! Text and binary file formats: raw CSV, IDX images, literal matrices,
//! model files, traces, heatmaps and predictions.

use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use ethereal_core::eval::{IncludeHeatmap, TradeoffPoint};
use ethereal_core::{DecodeError, LiteralMatrix, Phase, Prediction, RawDataset, SparseModel, TraceRecord};
use flate2::read::GzDecoder;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("IDX: {0}")]
    Idx(String),
    #[error(transparent)]
    Core(#[from] ethereal_core::Error),
    #[error("model file: {0}")]
    Decode(#[from] DecodeError),
}

pub type Result<T> = std::result::Result<T, FormatError>;

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> FormatError + '_ {
    move |source| FormatError::Io { path: path.to_path_buf(), source }
}

fn parse_err(line: usize, message: impl Into<String>) -> FormatError {
    FormatError::Parse { line, message: message.into() }
}

/// Opens `path`, decompressing on the fly when it ends in `.gz`.
pub fn open(path: &Path) -> Result<Box<dyn Read>> {
    let file = File::open(path).map_err(io_err(path))?;
    if path.extension().is_some_and(|e| e == "gz") {
        Ok(Box::new(GzDecoder::new(BufReader::new(file))))
    } else {
        Ok(Box::new(BufReader::new(file)))
    }
}

pub fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path).map(BufWriter::new).map_err(io_err(path))
}

fn finish(mut w: BufWriter<File>, path: &Path) -> Result<()> {
    w.flush().map_err(io_err(path))
}

/// Raw CSV: real-valued feature columns, integer class label in the last
/// column. The class count is one more than the largest label.
pub fn parse_raw_csv<R: Read>(reader: R, has_header: bool) -> Result<RawDataset> {
    let mut csv = csv::ReaderBuilder::new().has_headers(has_header).trim(csv::Trim::All).from_reader(reader);
    let mut values = Vec::new();
    let mut labels = Vec::new();
    let mut width = None;
    for (i, record) in csv.records().enumerate() {
        let record = record?;
        let line = record.position().map_or(i + 1, |p| p.line() as usize);
        if record.len() < 2 {
            return Err(parse_err(line, "need at least one feature column and a label"));
        }
        if *width.get_or_insert(record.len()) != record.len() {
            return Err(parse_err(line, format!("expected {} columns, found {}", width.unwrap(), record.len())));
        }
        for field in record.iter().take(record.len() - 1) {
            let v: f64 = field.parse().map_err(|_| parse_err(line, format!("not a number: {field:?}")))?;
            values.push(v);
        }
        let label = &record[record.len() - 1];
        labels.push(label.parse::<u32>().map_err(|_| parse_err(line, format!("bad label {label:?}")))?);
    }
    let n_features = width.map_or(0, |w| w - 1);
    let n_classes = labels.iter().max().map_or(0, |&m| m as usize + 1).max(2);
    Ok(RawDataset::new(n_features, n_classes, values, labels)?)
}

pub fn read_raw_csv(path: &Path, has_header: bool) -> Result<RawDataset> {
    parse_raw_csv(open(path)?, has_header)
}

fn read_all(path: &Path) -> Result<Vec<u8>> {
    let mut bytes = Vec::new();
    open(path)?.read_to_end(&mut bytes).map_err(io_err(path))?;
    Ok(bytes)
}

fn be_u32(bytes: &[u8], at: usize) -> Result<u32> {
    bytes
        .get(at..at + 4)
        .map(|b| u32::from_be_bytes([b[0], b[1], b[2], b[3]]))
        .ok_or_else(|| FormatError::Idx("truncated header".into()))
}

/// Parses an unsigned-byte IDX file; returns its dimensions and payload.
pub fn parse_idx(bytes: &[u8]) -> Result<(Vec<usize>, &[u8])> {
    let magic = be_u32(bytes, 0)?;
    if magic >> 8 != 0x08 {
        return Err(FormatError::Idx(format!("unsupported magic {magic:#010x} (want unsigned bytes)")));
    }
    let rank = (magic & 0xff) as usize;
    let dims = (0..rank).map(|d| be_u32(bytes, 4 + 4 * d).map(|v| v as usize)).collect::<Result<Vec<_>>>()?;
    let start = 4 + 4 * rank;
    let len: usize = dims.iter().product();
    let payload = bytes.get(start..start + len).ok_or_else(|| FormatError::Idx("truncated payload".into()))?;
    if bytes.len() != start + len {
        return Err(FormatError::Idx("trailing bytes".into()));
    }
    Ok((dims, payload))
}

/// Grayscale images and labels from an IDX pair, one feature per pixel.
pub fn read_idx(images: &Path, labels: &Path) -> Result<RawDataset> {
    let image_bytes = read_all(images)?;
    let label_bytes = read_all(labels)?;
    let (dims, pixels) = parse_idx(&image_bytes)?;
    let (ldims, label_data) = parse_idx(&label_bytes)?;
    if dims.is_empty() || ldims.len() != 1 || ldims[0] != dims[0] {
        return Err(FormatError::Idx(format!("image dims {dims:?} do not match label dims {ldims:?}")));
    }
    let n_features = dims[1..].iter().product();
    let labels: Vec<u32> = label_data.iter().map(|&l| u32::from(l)).collect();
    let n_classes = labels.iter().max().map_or(2, |&m| m as usize + 1).max(2);
    Ok(RawDataset::new(n_features, n_classes, pixels.iter().map(|&p| f64::from(p)).collect(), labels)?)
}

/// Literal matrix text: `LITv1 <n_samples> <n_literals> <n_classes>`, then per
/// sample a run of `0`/`1` characters, a space and the label.
pub fn write_lit<W: Write>(mut w: W, data: &LiteralMatrix) -> io::Result<()> {
    writeln!(w, "LITv1 {} {} {}", data.n_samples(), data.n_literals(), data.n_classes())?;
    let mut line = Vec::with_capacity(data.n_literals() + 8);
    for i in 0..data.n_samples() {
        line.clear();
        line.extend((0..data.n_literals()).map(|k| if data.literal(i, k) { b'1' } else { b'0' }));
        w.write_all(&line)?;
        writeln!(w, " {}", data.label(i))?;
    }
    Ok(())
}

pub fn parse_lit<R: BufRead>(reader: R) -> Result<LiteralMatrix> {
    let mut lines = reader.lines().enumerate();
    let header = match lines.next() {
        Some((_, line)) => line.map_err(|e| parse_err(1, e.to_string()))?,
        None => return Err(parse_err(1, "empty file")),
    };
    let fields: Vec<&str> = header.split_whitespace().collect();
    let [magic, n_samples, n_literals, n_classes] = fields[..] else {
        return Err(parse_err(1, "header must be `LITv1 <n_samples> <n_literals> <n_classes>`"));
    };
    if magic != "LITv1" {
        return Err(parse_err(1, format!("unknown format tag {magic:?}")));
    }
    let number = |s: &str| s.parse::<usize>().map_err(|_| parse_err(1, format!("bad number {s:?}")));
    let (n_samples, n_literals, n_classes) = (number(n_samples)?, number(n_literals)?, number(n_classes)?);
    if n_literals % 2 != 0 {
        return Err(parse_err(1, "literal count must be even"));
    }
    let mut data = LiteralMatrix::new(n_literals / 2, n_classes)?;
    let mut bits = Vec::with_capacity(n_literals);
    for (i, line) in lines {
        let line_no = i + 1;
        let line = line.map_err(|e| parse_err(line_no, e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        let (row, label) = line.trim_end().split_once(' ').ok_or_else(|| parse_err(line_no, "missing label"))?;
        bits.clear();
        for c in row.bytes() {
            match c {
                b'0' => bits.push(false),
                b'1' => bits.push(true),
                _ => return Err(parse_err(line_no, format!("unexpected character {:?}", c as char))),
            }
        }
        let label: u32 = label.trim().parse().map_err(|_| parse_err(line_no, format!("bad label {label:?}")))?;
        data.push_literals(&bits, label).map_err(|e| parse_err(line_no, e.to_string()))?;
    }
    if data.n_samples() != n_samples {
        return Err(parse_err(1, format!("header promises {n_samples} samples, found {}", data.n_samples())));
    }
    Ok(data)
}

pub fn read_lit(path: &Path) -> Result<LiteralMatrix> {
    parse_lit(BufReader::new(open(path)?))
}

pub fn save_lit(path: &Path, data: &LiteralMatrix) -> Result<()> {
    let mut w = create(path)?;
    write_lit(&mut w, data).map_err(io_err(path))?;
    finish(w, path)
}

pub fn read_model(path: &Path) -> Result<SparseModel> {
    Ok(SparseModel::from_bytes(&read_all(path)?)?)
}

pub fn write_bytes(path: &Path, bytes: &[u8]) -> Result<()> {
    std::fs::write(path, bytes).map_err(io_err(path))
}

pub fn read_bytes(path: &Path) -> Result<Vec<u8>> {
    read_all(path)
}

pub const TRACE_HEADER: &str = "epoch,phase,test_accuracy,includes_per_clause";

pub fn write_trace<W: Write>(mut w: W, records: &[TraceRecord]) -> io::Result<()> {
    writeln!(w, "{TRACE_HEADER}")?;
    for r in records {
        writeln!(w, "{},{},{},{}", r.epoch, r.phase, r.test_accuracy, r.includes_per_clause)?;
    }
    Ok(())
}

pub fn save_trace(path: &Path, records: &[TraceRecord]) -> Result<()> {
    let mut w = create(path)?;
    write_trace(&mut w, records).map_err(io_err(path))?;
    finish(w, path)
}

pub fn read_trace(path: &Path) -> Result<Vec<TraceRecord>> {
    let mut csv = csv::Reader::from_reader(open(path)?);
    let mut records = Vec::new();
    for (i, row) in csv.records().enumerate() {
        let row = row?;
        let line = i + 2;
        if row.len() != 4 {
            return Err(parse_err(line, "expected 4 columns"));
        }
        let num = |k: usize| row[k].parse::<f64>().map_err(|_| parse_err(line, format!("bad number {:?}", &row[k])));
        records.push(TraceRecord {
            epoch: row[0].parse().map_err(|_| parse_err(line, "bad epoch"))?,
            phase: Phase::parse(&row[1]).ok_or_else(|| parse_err(line, format!("bad phase {:?}", &row[1])))?,
            test_accuracy: num(2)?,
            includes_per_clause: num(3)?,
        });
    }
    Ok(records)
}

pub fn save_tradeoff(path: &Path, points: &[TradeoffPoint]) -> Result<()> {
    let mut w = create(path)?;
    let write = |w: &mut BufWriter<File>| -> io::Result<()> {
        writeln!(w, "epoch,phase,includes_per_clause,accuracy")?;
        for p in points {
            writeln!(w, "{},{},{},{}", p.epoch, p.phase, p.includes_per_clause, p.accuracy)?;
        }
        Ok(())
    };
    write(&mut w).map_err(io_err(path))?;
    finish(w, path)
}

pub fn save_heatmap(path: &Path, map: &IncludeHeatmap) -> Result<()> {
    let mut w = create(path)?;
    let write = |w: &mut BufWriter<File>| -> io::Result<()> {
        writeln!(w, "literal_index,positive_count,negative_count")?;
        for (k, (p, n)) in map.positive.iter().zip(&map.negative).enumerate() {
            writeln!(w, "{k},{p},{n}")?;
        }
        Ok(())
    };
    write(&mut w).map_err(io_err(path))?;
    finish(w, path)
}

/// `sample,label,predicted,sum_0,...,sum_{C-1}`.
pub fn save_predictions(path: &Path, data: &LiteralMatrix, predictions: &[Prediction]) -> Result<()> {
    let mut w = create(path)?;
    let write = |w: &mut BufWriter<File>| -> io::Result<()> {
        let n_classes = predictions.first().map_or(0, |p| p.class_sums.len());
        write!(w, "sample,label,predicted")?;
        for c in 0..n_classes {
            write!(w, ",sum_{c}")?;
        }
        writeln!(w)?;
        for (i, p) in predictions.iter().enumerate() {
            write!(w, "{i},{},{}", data.label(i), p.predicted)?;
            for s in &p.class_sums {
                write!(w, ",{s}")?;
            }
            writeln!(w)?;
        }
        Ok(())
    };
    write(&mut w).map_err(io_err(path))?;
    finish(w, path)
}
