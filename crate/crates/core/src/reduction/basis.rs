use std::fmt;
use std::io::Write as _;
use std::path::Path;
use std::str::FromStr;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::ortho::orthonormality_error;
use crate::error::{KmsError, Result};
use crate::fsutil::write_atomic;

/// Where a basis column came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case")]
pub enum ColumnTag {
    /// Eigenvector `k` (0-based, ascending `|α|`).
    Modal(usize),
    Krylov,
    /// Bilinear enrichment for patch `patch`, stage `stage ≥ 1`.
    Bilinear {
        patch: usize,
        stage: usize,
    },
}

impl fmt::Display for ColumnTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ColumnTag::Modal(k) => write!(f, "modal:{k}"),
            ColumnTag::Krylov => write!(f, "krylov"),
            ColumnTag::Bilinear { patch, stage } => write!(f, "bilinear:{patch}:{stage}"),
        }
    }
}

impl FromStr for ColumnTag {
    type Err = KmsError;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || KmsError::InvalidInput(format!("unknown column tag '{s}'"));
        let parts: Vec<&str> = s.split(':').collect();
        let num = |p: &str| p.parse::<usize>().map_err(|_| bad());
        match parts.as_slice() {
            ["krylov"] => Ok(ColumnTag::Krylov),
            ["modal", k] => Ok(ColumnTag::Modal(num(k)?)),
            ["bilinear", p, k] => Ok(ColumnTag::Bilinear {
                patch: num(p)?,
                stage: num(k)?,
            }),
            _ => Err(bad()),
        }
    }
}

/// Column-orthonormal basis `V` with per-column provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct ReductionBasis {
    pub v: DMatrix<f64>,
    pub tags: Vec<ColumnTag>,
    pub s_e: f64,
    pub omega_m: f64,
    /// Number of modal columns.
    pub mu: usize,
    /// Bilinear stages per patch (0 for a plain KMS basis).
    pub n_me: usize,
    /// Candidate columns before deflation.
    pub pre_deflation_width: usize,
}

impl ReductionBasis {
    pub fn n(&self) -> usize {
        self.v.nrows()
    }

    pub fn r(&self) -> usize {
        self.v.ncols()
    }

    /// `V = I`, useful as a reference reduction.
    pub fn identity(n: usize) -> Self {
        Self {
            v: DMatrix::identity(n, n),
            tags: vec![ColumnTag::Krylov; n],
            s_e: 0.0,
            omega_m: 0.0,
            mu: 0,
            n_me: 0,
            pre_deflation_width: n,
        }
    }

    pub fn orthonormality_error(&self) -> f64 {
        orthonormality_error(&self.v)
    }

    pub fn count(&self, pred: impl Fn(&ColumnTag) -> bool) -> usize {
        self.tags.iter().filter(|t| pred(t)).count()
    }

    fn header(&self) -> String {
        let tags: Vec<String> = self.tags.iter().map(|t| t.to_string()).collect();
        format!(
            "kms-basis 1\nn {}\nr {}\ns_e {:e}\nomega_m {:e}\nmu {}\nn_me {}\npre_deflation {}\ntags {}\nend\n",
            self.n(),
            self.r(),
            self.s_e,
            self.omega_m,
            self.mu,
            self.n_me,
            self.pre_deflation_width,
            tags.join(" ")
        )
    }

    /// Text header terminated by `end`, then `V` as column-major little-endian `f64`.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = self.header().into_bytes();
        out.reserve(8 * self.v.len());
        for x in self.v.as_slice() {
            out.extend_from_slice(&x.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8], origin: &str) -> Result<Self> {
        let marker = b"\nend\n";
        let pos = bytes
            .windows(marker.len())
            .position(|w| w == marker)
            .ok_or_else(|| parse_err(origin, 1, "missing 'end' header marker"))?;
        let header = std::str::from_utf8(&bytes[..pos + 1]).map_err(|_| parse_err(origin, 1, "header is not UTF-8"))?;
        let mut b = Self::parse_header(header, origin)?;
        let data = &bytes[pos + marker.len()..];
        let (n, r) = (b.v.nrows(), b.v.ncols());
        if data.len() != 8 * n * r {
            return Err(parse_err(
                origin,
                0,
                &format!("expected {} data bytes, found {}", 8 * n * r, data.len()),
            ));
        }
        for (dst, chunk) in b.v.as_mut_slice().iter_mut().zip(data.chunks_exact(8)) {
            *dst = f64::from_le_bytes(chunk.try_into().expect("chunk of 8"));
        }
        Ok(b)
    }

    fn parse_header(header: &str, origin: &str) -> Result<Self> {
        let mut lines = header.lines().enumerate();
        match lines.next() {
            Some((_, l)) if l.trim() == "kms-basis 1" => {}
            _ => return Err(parse_err(origin, 1, "not a kms-basis file")),
        }
        let (mut n, mut r, mut mu, mut n_me, mut pre) = (None, None, 0, 0, None);
        let (mut s_e, mut omega_m) = (0.0, 0.0);
        let mut tags = Vec::new();
        for (ln, l) in lines {
            let (key, val) = l.split_once(' ').unwrap_or((l, ""));
            let int = |v: &str| {
                v.trim()
                    .parse::<usize>()
                    .map_err(|_| parse_err(origin, ln + 1, &format!("bad integer for {key}")))
            };
            let real = |v: &str| {
                v.trim()
                    .parse::<f64>()
                    .map_err(|_| parse_err(origin, ln + 1, &format!("bad number for {key}")))
            };
            match key {
                "n" => n = Some(int(val)?),
                "r" => r = Some(int(val)?),
                "s_e" => s_e = real(val)?,
                "omega_m" => omega_m = real(val)?,
                "mu" => mu = int(val)?,
                "n_me" => n_me = int(val)?,
                "pre_deflation" => pre = Some(int(val)?),
                "tags" => tags = val.split_whitespace().map(ColumnTag::from_str).collect::<Result<_>>()?,
                "" => {}
                other => return Err(parse_err(origin, ln + 1, &format!("unknown key '{other}'"))),
            }
        }
        let n = n.ok_or_else(|| parse_err(origin, 0, "missing n"))?;
        let r = r.ok_or_else(|| parse_err(origin, 0, "missing r"))?;
        if tags.len() != r {
            return Err(parse_err(origin, 0, &format!("{} tags for {r} columns", tags.len())));
        }
        Ok(Self {
            v: DMatrix::zeros(n, r),
            tags,
            s_e,
            omega_m,
            mu,
            n_me,
            pre_deflation_width: pre.unwrap_or(r),
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        write_atomic(path, &self.to_bytes())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|e| KmsError::io(path, e))?;
        Self::from_bytes(&bytes, &path.display().to_string())
    }

    /// Same header as comment lines, then one CSV row per state dof.
    pub fn to_csv(&self) -> String {
        let mut out = Vec::new();
        for l in self.header().lines() {
            let _ = writeln!(out, "# {l}");
        }
        let names: Vec<String> = self.tags.iter().map(|t| t.to_string()).collect();
        let _ = writeln!(out, "{}", names.join(","));
        for i in 0..self.n() {
            let row: Vec<String> = (0..self.r()).map(|j| format!("{:e}", self.v[(i, j)])).collect();
            let _ = writeln!(out, "{}", row.join(","));
        }
        String::from_utf8(out).expect("ascii")
    }

    pub fn from_csv(text: &str, origin: &str) -> Result<Self> {
        let header: String = text
            .lines()
            .take_while(|l| l.starts_with('#'))
            .map(|l| format!("{}\n", l.trim_start_matches('#').trim_start()))
            .collect();
        let mut b = Self::parse_header(header.trim_end_matches("end\n"), origin)?;
        let skip = header.lines().count() + 1;
        let (n, r) = (b.n(), b.r());
        let mut rows = 0;
        for (ln, l) in text.lines().enumerate().skip(skip) {
            if l.trim().is_empty() {
                continue;
            }
            if rows >= n {
                return Err(parse_err(origin, ln + 1, "too many rows"));
            }
            let vals: Vec<f64> = l
                .split(',')
                .map(|v| v.trim().parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|_| parse_err(origin, ln + 1, "malformed number"))?;
            if vals.len() != r {
                return Err(parse_err(origin, ln + 1, &format!("expected {r} values")));
            }
            for (j, v) in vals.into_iter().enumerate() {
                b.v[(rows, j)] = v;
            }
            rows += 1;
        }
        if rows != n {
            return Err(parse_err(origin, 0, &format!("expected {n} rows, found {rows}")));
        }
        Ok(b)
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        write_atomic(path, self.to_csv().as_bytes())
    }
}

fn parse_err(origin: &str, line: usize, msg: &str) -> KmsError {
    KmsError::Parse {
        path: origin.to_string(),
        line,
        msg: msg.to_string(),
    }
}
