//! Stratified case/control data and its reduction to paired differences.
//!
//! Input is CSV with header `stratum,y,x1,...,xp`. Rows are grouped by the
//! `stratum` key in order of first appearance; row order inside a stratum is
//! preserved. Lines starting with `#` are comments.

use std::collections::HashMap;
use std::io::{Read, Write};

use crate::numerics::Matrix;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Label {
    Control,
    Case,
}

impl Label {
    pub fn from_code(code: u8) -> Option<Self> {
        match code {
            0 => Some(Self::Control),
            1 => Some(Self::Case),
            _ => None,
        }
    }

    pub fn code(self) -> u8 {
        match self {
            Self::Control => 0,
            Self::Case => 1,
        }
    }

    pub fn is_case(self) -> bool {
        self == Self::Case
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    pub label: Label,
    pub x: Vec<f64>,
}

impl Observation {
    pub fn new(label: Label, x: Vec<f64>) -> Self {
        Self { label, x }
    }

    pub fn case(x: Vec<f64>) -> Self {
        Self::new(Label::Case, x)
    }

    pub fn control(x: Vec<f64>) -> Self {
        Self::new(Label::Control, x)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Stratum {
    pub id: String,
    pub members: Vec<Observation>,
}

impl Stratum {
    pub fn new(id: impl Into<String>, members: Vec<Observation>) -> Self {
        Self {
            id: id.into(),
            members,
        }
    }

    pub fn size(&self) -> usize {
        self.members.len()
    }

    pub fn case_count(&self) -> usize {
        self.members.iter().filter(|o| o.label.is_case()).count()
    }

    pub fn cases(&self) -> impl Iterator<Item = &Observation> {
        self.members.iter().filter(|o| o.label.is_case())
    }

    pub fn controls(&self) -> impl Iterator<Item = &Observation> {
        self.members.iter().filter(|o| !o.label.is_case())
    }

    /// One case and one control.
    pub fn is_discordant_pair(&self) -> bool {
        self.size() == 2 && self.case_count() == 1
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MatchedDataset {
    strata: Vec<Stratum>,
    p: usize,
}

impl MatchedDataset {
    pub fn new(strata: Vec<Stratum>) -> Result<Self> {
        let p = strata
            .first()
            .and_then(|s| s.members.first())
            .map(|o| o.x.len())
            .ok_or(Error::NoDataRows)?;
        let mut seen = HashMap::with_capacity(strata.len());
        for s in &strata {
            if s.members.is_empty() {
                return Err(Error::InvalidArgument(format!("stratum {} is empty", s.id)));
            }
            if seen.insert(s.id.as_str(), ()).is_some() {
                return Err(Error::DuplicateStratum(s.id.clone()));
            }
            for o in &s.members {
                if o.x.len() != p {
                    return Err(Error::DimensionMismatch {
                        expected: p,
                        found: o.x.len(),
                    });
                }
                if o.x.iter().any(|v| !v.is_finite()) {
                    return Err(Error::NonFinite(format!("predictor in stratum {}", s.id)));
                }
            }
        }
        Ok(Self { strata, p })
    }

    /// One stratum per row of `z`: a case at `z_i` and a control at the
    /// origin, so that `pair_differences` returns `z` unchanged.
    pub fn from_differences(z: &PairedDifferences) -> Self {
        let strata = z
            .rows()
            .enumerate()
            .map(|(i, row)| {
                Stratum::new(
                    format!("s{i}"),
                    vec![
                        Observation::case(row.to_vec()),
                        Observation::control(vec![0.0; z.p()]),
                    ],
                )
            })
            .collect();
        Self { strata, p: z.p() }
    }

    pub fn strata(&self) -> &[Stratum] {
        &self.strata
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn observation_count(&self) -> usize {
        self.strata.iter().map(Stratum::size).sum()
    }

    pub fn all_pairs(&self) -> bool {
        self.strata.iter().all(Stratum::is_discordant_pair)
    }

    /// Writes the dataset in the CSV layout accepted by [`parse_dataset`].
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        write!(out, "stratum,y")?;
        for j in 1..=self.p {
            write!(out, ",x{j}")?;
        }
        writeln!(out)?;
        for s in &self.strata {
            for o in &s.members {
                write!(out, "{},{}", s.id, o.label.code())?;
                for v in &o.x {
                    write!(out, ",{v}")?;
                }
                writeln!(out)?;
            }
        }
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)
            .expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("ascii output")
    }
}

fn parse_error(line: u64, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

/// Parses `stratum,y,x1..xp` CSV.
pub fn parse_dataset<R: Read>(source: R) -> Result<MatchedDataset> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(source);

    let header = reader
        .headers()
        .map_err(|e| parse_error(1, format!("unreadable header: {e}")))?
        .clone();
    if header.is_empty() || (header.len() == 1 && header[0].is_empty()) {
        return Err(Error::NoDataRows);
    }
    if header.len() < 3 || &header[0] != "stratum" || &header[1] != "y" {
        return Err(parse_error(
            1,
            "header must be `stratum,y,x1,...,xp` with at least one predictor",
        ));
    }
    let p = header.len() - 2;

    let mut order: Vec<Stratum> = Vec::new();
    let mut index: HashMap<String, usize> = HashMap::new();
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, csv::Position::line);
            parse_error(line, format!("malformed row: {e}"))
        })?;
        let line = record.position().map_or(0, csv::Position::line);
        if record.len() == 1 && record[0].is_empty() {
            continue;
        }
        if record.len() != p + 2 {
            return Err(parse_error(
                line,
                format!("expected {} columns, found {}", p + 2, record.len()),
            ));
        }
        let id = &record[0];
        if id.is_empty() {
            return Err(parse_error(line, "empty stratum id"));
        }
        let label = record[1]
            .parse::<u8>()
            .ok()
            .and_then(Label::from_code)
            .ok_or_else(|| parse_error(line, "label must be 0 or 1"))?;
        let x = record
            .iter()
            .skip(2)
            .enumerate()
            .map(|(j, cell)| match cell.parse::<f64>() {
                Ok(v) if v.is_finite() => Ok(v),
                _ => Err(parse_error(
                    line,
                    format!("predictor x{} is not a finite number: {cell:?}", j + 1),
                )),
            })
            .collect::<Result<Vec<f64>>>()?;

        let slot = *index.entry(id.to_string()).or_insert_with(|| {
            order.push(Stratum::new(id, Vec::new()));
            order.len() - 1
        });
        order[slot].members.push(Observation::new(label, x));
    }
    if order.is_empty() {
        return Err(Error::NoDataRows);
    }
    MatchedDataset::new(order)
}

/// Case-minus-control differences of 1:1 matched pairs, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct PairedDifferences {
    n: usize,
    p: usize,
    data: Vec<f64>,
}

impl PairedDifferences {
    pub fn new(n: usize, p: usize, data: Vec<f64>) -> Result<Self> {
        if n == 0 || p == 0 {
            return Err(Error::InvalidArgument(
                "paired differences need n >= 1 and p >= 1".into(),
            ));
        }
        if data.len() != n * p {
            return Err(Error::DimensionMismatch {
                expected: n * p,
                found: data.len(),
            });
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("paired difference".into()));
        }
        Ok(Self { n, p, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let p = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(rows.len() * p);
        for r in rows {
            if r.len() != p {
                return Err(Error::DimensionMismatch {
                    expected: p,
                    found: r.len(),
                });
            }
            data.extend_from_slice(r);
        }
        Self::new(rows.len(), p, data)
    }

    /// Convenience for `p = 1`.
    pub fn from_scalars(values: &[f64]) -> Result<Self> {
        Self::new(values.len(), 1, values.to_vec())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.p..(i + 1) * self.p]
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[f64]> {
        self.data.chunks_exact(self.p)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    /// Swaps the case/control roles.
    pub fn negated(&self) -> Self {
        Self {
            n: self.n,
            p: self.p,
            data: self.data.iter().map(|v| -v).collect(),
        }
    }

    /// Row-wise `z_i ↦ A z_i`.
    pub fn transformed(&self, a: &Matrix) -> Result<Self> {
        if a.cols() != self.p {
            return Err(Error::DimensionMismatch {
                expected: self.p,
                found: a.cols(),
            });
        }
        let mut data = Vec::with_capacity(self.n * a.rows());
        for row in self.rows() {
            data.extend(a.mul_vec(row)?);
        }
        Self::new(self.n, a.rows(), data)
    }

    pub fn mean(&self) -> Vec<f64> {
        let mut m = vec![0.0; self.p];
        for row in self.rows() {
            for (acc, v) in m.iter_mut().zip(row) {
                *acc += v;
            }
        }
        let n = self.n as f64;
        m.iter_mut().for_each(|v| *v /= n);
        m
    }

    /// `(1/n) Σ z_i z_iᵀ`
    pub fn second_moment(&self) -> Matrix {
        let mut s = Matrix::zeros(self.p, self.p);
        for row in self.rows() {
            s.add_outer(row, 1.0);
        }
        s.scale(1.0 / self.n as f64)
    }

    /// Largest Euclidean row norm.
    pub fn max_row_norm(&self) -> f64 {
        self.rows()
            .map(|r| r.iter().map(|v| v * v).sum::<f64>().sqrt())
            .fold(0.0, f64::max)
    }
}

/// Case minus control for every stratum, in stratum order.
pub fn pair_differences(dataset: &MatchedDataset) -> Result<PairedDifferences> {
    let p = dataset.p();
    let mut data = Vec::with_capacity(dataset.strata().len() * p);
    for s in dataset.strata() {
        if !s.is_discordant_pair() {
            return Err(Error::NotDiscordantPair(s.id.clone()));
        }
        let case = s.cases().next().expect("one case");
        let control = s.controls().next().expect("one control");
        data.extend(case.x.iter().zip(&control.x).map(|(a, b)| a - b));
    }
    PairedDifferences::new(dataset.strata().len(), p, data)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PairSummary {
    pub n: usize,
    pub mean: Vec<f64>,
    /// `(1/(n-1)) Σ (z_i - z̄)(z_i - z̄)ᵀ`
    pub cov_unbiased: Matrix,
    /// `(1/n) Σ z_i z_iᵀ`
    pub second_moment: Matrix,
}

pub fn summarize(z: &PairedDifferences) -> Result<PairSummary> {
    if z.n() < 2 {
        return Err(Error::TooFewPairs {
            needed: 2,
            found: z.n(),
        });
    }
    let mean = z.mean();
    let mut cov = Matrix::zeros(z.p(), z.p());
    let mut centered = vec![0.0; z.p()];
    for row in z.rows() {
        for ((c, v), m) in centered.iter_mut().zip(row).zip(&mean) {
            *c = v - m;
        }
        cov.add_outer(&centered, 1.0);
    }
    Ok(PairSummary {
        n: z.n(),
        cov_unbiased: cov.scale(1.0 / (z.n() - 1) as f64),
        second_moment: z.second_moment(),
        mean,
    })
}
