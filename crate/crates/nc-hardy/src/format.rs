//! JSON and CSV interchange formats.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use nc_hardy_core::haar::MCEstimate;
use nc_hardy_core::linalg::{c, CMatrix};
use nc_hardy_core::words::{MatrixTuple, NcSeries, Word};
use serde::{Deserialize, Serialize};
use serde_json::Value;

#[derive(Debug, thiserror::Error)]
pub enum FormatError {
    #[error("malformed JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("term {index}: {message}")]
    Term { index: usize, message: String },
    #[error("matrix {index}: {message}")]
    Matrix { index: usize, message: String },
    #[error("{0}")]
    Invalid(String),
}

#[derive(Debug, Serialize, Deserialize)]
struct TermJson {
    word: Vec<usize>,
    re: f64,
    #[serde(default)]
    im: f64,
}

#[derive(Debug, Serialize, Deserialize)]
struct SeriesJson<T> {
    m: usize,
    terms: Vec<T>,
}

/// Parses `{"m": 2, "terms": [{"word": [1,2], "re": 1.0, "im": 0.0}, …]}`.
/// Errors in a term name its position in `terms`.
pub fn parse_series(text: &str) -> Result<NcSeries, FormatError> {
    let raw: SeriesJson<Value> = serde_json::from_str(text)?;
    if raw.m == 0 {
        return Err(FormatError::Invalid("alphabet size m must be at least 1".into()));
    }
    let mut seen = BTreeSet::new();
    let mut series = NcSeries::zero(raw.m);
    for (index, value) in raw.terms.into_iter().enumerate() {
        let term_err = |message: String| FormatError::Term { index, message };
        let term: TermJson = serde_json::from_value(value).map_err(|e| term_err(e.to_string()))?;
        if !(term.re.is_finite() && term.im.is_finite()) {
            return Err(term_err("coefficient is not finite".into()));
        }
        let word = Word::new(&term.word).map_err(|e| term_err(e.to_string()))?;
        word.check_alphabet(raw.m).map_err(|e| term_err(e.to_string()))?;
        if !seen.insert(word.clone()) {
            return Err(term_err(format!("duplicate word {word}")));
        }
        series.add_term(word, c(term.re, term.im)).map_err(|e| term_err(e.to_string()))?;
    }
    Ok(series)
}

pub fn series_to_json(f: &NcSeries) -> String {
    let terms = f
        .terms()
        .map(|(w, z)| TermJson { word: w.letters().collect(), re: z.re, im: z.im })
        .collect();
    serde_json::to_string_pretty(&SeriesJson { m: f.alphabet(), terms }).expect("plain data")
}

#[derive(Debug, Serialize, Deserialize)]
struct TupleJson {
    m: usize,
    n: usize,
    matrices: Vec<Vec<[f64; 2]>>,
}

/// Parses `{"m": …, "n": …, "matrices": [[[re, im], …], …]}`, each matrix
/// listed row-major.
pub fn parse_tuple(text: &str) -> Result<MatrixTuple, FormatError> {
    let raw: TupleJson = serde_json::from_str(text)?;
    if raw.m == 0 {
        return Err(FormatError::Invalid("alphabet size m must be at least 1".into()));
    }
    if raw.matrices.len() != raw.m {
        return Err(FormatError::Invalid(format!("expected {} matrices, found {}", raw.m, raw.matrices.len())));
    }
    let mut mats = Vec::with_capacity(raw.m);
    for (index, entries) in raw.matrices.iter().enumerate() {
        if entries.len() != raw.n * raw.n {
            return Err(FormatError::Matrix {
                index,
                message: format!("expected {} entries, found {}", raw.n * raw.n, entries.len()),
            });
        }
        if entries.iter().flatten().any(|x| !x.is_finite()) {
            return Err(FormatError::Matrix { index, message: "entry is not finite".into() });
        }
        mats.push(CMatrix::from_row_iterator(raw.n, raw.n, entries.iter().map(|&[re, im]| c(re, im))));
    }
    if raw.n == 0 {
        return Ok(MatrixTuple::zeros(raw.m, 0));
    }
    MatrixTuple::new(mats).map_err(|e| FormatError::Invalid(e.to_string()))
}

pub fn tuple_to_json(x: &MatrixTuple) -> String {
    let n = x.dim();
    let matrices = x
        .matrices()
        .iter()
        .map(|a| (0..n).flat_map(|i| (0..n).map(move |j| [a[(i, j)].re, a[(i, j)].im])).collect())
        .collect();
    serde_json::to_string_pretty(&TupleJson { m: x.alphabet(), n, matrices }).expect("plain data")
}

/// Row-major `[[re, im], …]` rows of a matrix.
pub fn matrix_rows(a: &CMatrix) -> Vec<Vec<[f64; 2]>> {
    (0..a.nrows()).map(|i| (0..a.ncols()).map(|j| [a[(i, j)].re, a[(i, j)].im]).collect()).collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EstimateJson {
    pub re: f64,
    pub im: f64,
    pub std_error: f64,
    pub samples: usize,
    pub seed: u64,
}

impl From<&MCEstimate> for EstimateJson {
    fn from(e: &MCEstimate) -> Self {
        EstimateJson { re: e.mean.re, im: e.mean.im, std_error: e.std_error, samples: e.samples, seed: e.seed }
    }
}

pub const CSV_HEADER: &str = "param_r,param_N,value_re,value_im,std_error";

/// 17 significant digits, lowercase scientific.
pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

/// One grid line; an exact value leaves `std_error` empty.
pub fn csv_line(out: &mut String, r: Option<f64>, level: Option<usize>, re: f64, im: f64, std_error: Option<f64>) {
    let r = r.map(num).unwrap_or_default();
    let level = level.map(|n| n.to_string()).unwrap_or_default();
    let se = std_error.map(num).unwrap_or_default();
    writeln!(out, "{r},{level},{},{},{se}", num(re), num(im)).expect("writing to a String");
}
