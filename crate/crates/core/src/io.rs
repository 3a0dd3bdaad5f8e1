//! Embedding files (word2vec text and a compact binary variant) and label files.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use nalgebra::DMatrix;

use crate::error::{Result, SmfError};
use crate::graph::GraphStore;
use crate::smf::EmbeddingTable;

pub const BINARY_MAGIC: [u8; 4] = *b"SMFE";
pub const BINARY_VERSION: u32 = 1;

/// Labelled vectors, one row per node.
#[derive(Clone, Debug, PartialEq)]
pub struct NodeVectors {
    pub labels: Vec<String>,
    /// rows × dim
    pub data: DMatrix<f64>,
}

impl NodeVectors {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.data.ncols()
    }

    pub fn index(&self) -> HashMap<&str, usize> {
        self.labels.iter().enumerate().map(|(i, l)| (l.as_str(), i)).collect()
    }

    /// W columns of `table`, or W stacked over C when `with_context` is set.
    pub fn from_table(g: &GraphStore, table: &EmbeddingTable, with_context: bool) -> Self {
        let labels = table.nodes.iter().map(|&v| g.label(v).to_string()).collect();
        let data = if with_context {
            let d = table.dim();
            let mut both = DMatrix::zeros(2 * d, table.len());
            both.rows_mut(0, d).copy_from(&table.w);
            both.rows_mut(d, d).copy_from(&table.c);
            both.transpose()
        } else {
            table.w.transpose()
        };
        NodeVectors { labels, data }
    }
}

/// C `%g`-style formatting with 6 significant digits.
pub fn format_g6(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let sci = format!("{x:.5e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    let trim = |s: &str| {
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s.to_string()
        }
    };
    if (-4..6).contains(&exp) {
        let decimals = (5 - exp) as usize;
        trim(&format!("{x:.decimals$}"))
    } else {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{sign}{:02}", trim(mantissa), exp.abs())
    }
}

pub fn write_word2vec_text(path: impl AsRef<Path>, vectors: &NodeVectors) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| SmfError::io(path, e))?;
    let mut out = BufWriter::new(file);
    let io_err = |e| SmfError::io(path, e);
    writeln!(out, "{} {}", vectors.len(), vectors.dim()).map_err(io_err)?;
    for (i, label) in vectors.labels.iter().enumerate() {
        let mut line = label.clone();
        for v in vectors.data.row(i).iter() {
            line.push(' ');
            line.push_str(&format_g6(*v));
        }
        writeln!(out, "{line}").map_err(io_err)?;
    }
    out.flush().map_err(io_err)
}

/// 16-byte header (magic, version, rows, dim; all little-endian), the f32
/// matrix in row order, then `u32` length-prefixed UTF-8 labels.
pub fn write_binary(path: impl AsRef<Path>, vectors: &NodeVectors) -> Result<()> {
    let path = path.as_ref();
    let to_u32 = |x: usize, what: &str| {
        u32::try_from(x).map_err(|_| SmfError::InvalidArgument(format!("{what} {x} exceeds u32")))
    };
    let mut buf = Vec::with_capacity(16 + vectors.len() * (vectors.dim() * 4 + 8));
    buf.extend_from_slice(&BINARY_MAGIC);
    buf.extend_from_slice(&BINARY_VERSION.to_le_bytes());
    buf.extend_from_slice(&to_u32(vectors.len(), "row count")?.to_le_bytes());
    buf.extend_from_slice(&to_u32(vectors.dim(), "dimension")?.to_le_bytes());
    for i in 0..vectors.len() {
        for v in vectors.data.row(i).iter() {
            buf.extend_from_slice(&(*v as f32).to_le_bytes());
        }
    }
    for label in &vectors.labels {
        buf.extend_from_slice(&to_u32(label.len(), "label length")?.to_le_bytes());
        buf.extend_from_slice(label.as_bytes());
    }
    std::fs::write(path, buf).map_err(|e| SmfError::io(path, e))
}

/// Reads either format, sniffing the binary magic.
pub fn read_embeddings(path: impl AsRef<Path>) -> Result<NodeVectors> {
    let path = path.as_ref();
    let mut bytes = Vec::new();
    File::open(path)
        .and_then(|mut f| f.read_to_end(&mut bytes))
        .map_err(|e| SmfError::io(path, e))?;
    if bytes.starts_with(&BINARY_MAGIC) {
        read_binary_bytes(path, &bytes)
    } else {
        read_text_bytes(path, &bytes)
    }
}

fn read_binary_bytes(path: &Path, bytes: &[u8]) -> Result<NodeVectors> {
    let corrupt = |message: &str| SmfError::Parse {
        path: path.to_path_buf(),
        line: 0,
        message: message.to_string(),
    };
    let mut at = 0usize;
    let mut take = |n: usize| -> Result<&[u8]> {
        let s = bytes.get(at..at + n).ok_or_else(|| corrupt("truncated binary embedding file"))?;
        at += n;
        Ok(s)
    };
    let u32_at = |s: &[u8]| u32::from_le_bytes(s.try_into().expect("4 bytes")) as usize;
    take(4)?;
    let version = u32_at(take(4)?);
    if version != BINARY_VERSION as usize {
        return Err(SmfError::Unsupported(format!(
            "binary embedding version {version} (expected {BINARY_VERSION})"
        )));
    }
    let rows = u32_at(take(4)?);
    let dim = u32_at(take(4)?);
    let mut values = Vec::with_capacity(rows * dim);
    for _ in 0..rows * dim {
        values.push(f32::from_le_bytes(take(4)?.try_into().expect("4 bytes")) as f64);
    }
    let mut labels = Vec::with_capacity(rows);
    for _ in 0..rows {
        let len = u32_at(take(4)?);
        let raw = take(len)?;
        labels.push(
            String::from_utf8(raw.to_vec()).map_err(|_| corrupt("label is not UTF-8"))?,
        );
    }
    Ok(NodeVectors {
        labels,
        data: DMatrix::from_row_slice(rows, dim, &values),
    })
}

fn read_text_bytes(path: &Path, bytes: &[u8]) -> Result<NodeVectors> {
    let parse_err = |line: usize, message: String| SmfError::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };
    let mut lines = BufReader::new(bytes).lines().enumerate();
    let (_, header) = lines.next().ok_or_else(|| parse_err(1, "missing header".into()))?;
    let header = header.map_err(|e| SmfError::io(path, e))?;
    let dims: Vec<usize> = header
        .split_whitespace()
        .map(str::parse)
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| parse_err(1, format!("bad header '{header}'")))?;
    let [rows, dim] = dims[..] else {
        return Err(parse_err(1, format!("header must be 'rows dim', got '{header}'")));
    };
    let mut labels = Vec::with_capacity(rows);
    let mut values = Vec::with_capacity(rows * dim);
    for (i, line) in lines {
        let line = line.map_err(|e| SmfError::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let mut tokens = line.split_whitespace();
        let label = tokens.next().expect("non-empty line");
        let before = values.len();
        for t in tokens {
            values.push(
                t.parse::<f64>()
                    .map_err(|_| parse_err(i + 1, format!("bad value '{t}'")))?,
            );
        }
        if values.len() - before != dim {
            return Err(parse_err(
                i + 1,
                format!("expected {dim} values, found {}", values.len() - before),
            ));
        }
        labels.push(label.to_string());
    }
    if labels.len() != rows {
        return Err(parse_err(0, format!("header announces {rows} rows, found {}", labels.len())));
    }
    Ok(NodeVectors {
        labels,
        data: DMatrix::from_row_slice(rows, dim, &values),
    })
}

/// Class assignments read from "node_label class_id" lines.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LabelSet {
    /// Node labels in first-seen order with their class indices.
    pub nodes: Vec<(String, Vec<usize>)>,
    pub class_names: Vec<String>,
}

impl LabelSet {
    pub fn class_count(&self) -> usize {
        self.class_names.len()
    }

    pub fn is_multi_label(&self) -> bool {
        self.nodes.iter().any(|(_, c)| c.len() > 1)
    }

    /// Keeps only nodes accepted by `keep`.
    pub fn filter(&self, keep: impl Fn(&str) -> bool) -> LabelSet {
        LabelSet {
            nodes: self.nodes.iter().filter(|(l, _)| keep(l)).cloned().collect(),
            class_names: self.class_names.clone(),
        }
    }
}

pub fn load_labels(path: impl AsRef<Path>) -> Result<LabelSet> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| SmfError::io(path, e))?;
    let mut class_index: HashMap<String, usize> = HashMap::new();
    let mut class_names = Vec::new();
    let mut node_index: HashMap<String, usize> = HashMap::new();
    let mut nodes: Vec<(String, Vec<usize>)> = Vec::new();
    for (lineno, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| SmfError::io(path, e))?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let mut tokens = trimmed.split_whitespace();
        let (Some(node), Some(class), None) = (tokens.next(), tokens.next(), tokens.next()) else {
            return Err(SmfError::Parse {
                path: path.to_path_buf(),
                line: lineno + 1,
                message: "expected 'node_label class_id'".into(),
            });
        };
        let c = *class_index.entry(class.to_string()).or_insert_with(|| {
            class_names.push(class.to_string());
            class_names.len() - 1
        });
        let slot = *node_index.entry(node.to_string()).or_insert_with(|| {
            nodes.push((node.to_string(), Vec::new()));
            nodes.len() - 1
        });
        if !nodes[slot].1.contains(&c) {
            nodes[slot].1.push(c);
        }
    }
    if nodes.is_empty() {
        return Err(SmfError::InvalidArgument(format!("{} has no labels", path.display())));
    }
    Ok(LabelSet { nodes, class_names })
}
