//! File formats written by the experiment driver.
//!
//! Every text artifact starts with a header recording the config hash, the
//! seed and the crate version: `#`-prefixed lines in CSV files and a `meta`
//! object in JSON files. The binary path dump is documented on
//! [`write_paths_binary`].

use std::io::{BufRead, Read, Write};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::bridge::{BridgePath, BridgeSpec};
use crate::error::{Error, Result};
use crate::multiindex::MultiIndex;
use crate::propagator::PropagatorSolution;
use crate::stats::KsResult;

pub const ARTIFACT_VERSION: &str = env!("CARGO_PKG_VERSION");
pub const BINARY_MAGIC: &[u8; 4] = b"WCEB";
pub const BINARY_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArtifactMeta {
    pub config_hash: String,
    pub seed: u64,
    pub version: String,
}

impl ArtifactMeta {
    /// SHA-256 of the config's JSON serialization.
    pub fn new<C: Serialize>(config: &C, seed: u64) -> Result<Self> {
        let bytes = serde_json::to_vec(config)?;
        Ok(ArtifactMeta {
            config_hash: hex::encode(Sha256::digest(&bytes)),
            seed,
            version: ARTIFACT_VERSION.to_string(),
        })
    }

    fn write_csv_header(&self, w: &mut impl Write) -> std::io::Result<()> {
        writeln!(w, "# config_hash={}", self.config_hash)?;
        writeln!(w, "# seed={}", self.seed)?;
        writeln!(w, "# version={}", self.version)
    }
}

/// Long-format path table `path_id,t,y`, with an `attempts` column when
/// attempt counts are given.
pub fn write_paths_csv(
    w: &mut impl Write,
    meta: &ArtifactMeta,
    paths: &[BridgePath],
    attempts: Option<&[usize]>,
) -> std::io::Result<()> {
    meta.write_csv_header(w)?;
    match attempts {
        Some(_) => writeln!(w, "path_id,t,y,attempts")?,
        None => writeln!(w, "path_id,t,y")?,
    }
    for (k, p) in paths.iter().enumerate() {
        for (j, y) in p.values.iter().enumerate() {
            let t = p.grid.node(j);
            match attempts {
                Some(a) => writeln!(w, "{},{t},{y},{}", p.path, a[k])?,
                None => writeln!(w, "{},{t},{y}", p.path)?,
            }
        }
    }
    Ok(())
}

/// One row of a path CSV.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathRow {
    pub path_id: u64,
    pub t: f64,
    pub y: f64,
}

/// Reads a path CSV back, skipping `#` lines and the header row.
pub fn read_paths_csv(r: impl BufRead) -> Result<Vec<PathRow>> {
    let bad = |line: usize, msg: &str| Error::Argument(format!("path CSV line {line}: {msg}"));
    let mut rows = Vec::new();
    let mut header_seen = false;
    for (i, line) in r.lines().enumerate() {
        let line = line.map_err(|e| Error::io("<path csv>", e))?;
        if line.starts_with('#') || line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if !header_seen {
            if fields.len() < 3 || fields[..3] != ["path_id", "t", "y"] {
                return Err(bad(i + 1, "expected header path_id,t,y"));
            }
            header_seen = true;
            continue;
        }
        if fields.len() < 3 {
            return Err(bad(i + 1, "too few fields"));
        }
        rows.push(PathRow {
            path_id: fields[0].parse().map_err(|_| bad(i + 1, "bad path_id"))?,
            t: fields[1].parse().map_err(|_| bad(i + 1, "bad t"))?,
            y: fields[2].parse().map_err(|_| bad(i + 1, "bad y"))?,
        });
    }
    if !header_seen {
        return Err(bad(0, "missing header"));
    }
    Ok(rows)
}

/// Binary dump: magic `WCEB`, version `u32`, node count `u64`, path count
/// `u64`, then `n_paths x nodes` `f64` values, row-major by path. All
/// integers and floats are little-endian.
pub fn write_paths_binary(w: &mut impl Write, paths: &[BridgePath]) -> std::io::Result<()> {
    let nodes = paths.first().map_or(0, |p| p.values.len());
    w.write_all(BINARY_MAGIC)?;
    w.write_all(&BINARY_VERSION.to_le_bytes())?;
    w.write_all(&(nodes as u64).to_le_bytes())?;
    w.write_all(&(paths.len() as u64).to_le_bytes())?;
    for p in paths {
        for v in &p.values {
            w.write_all(&v.to_le_bytes())?;
        }
    }
    Ok(())
}

/// Returns `(nodes, rows)` from a binary dump.
pub fn read_paths_binary(r: &mut impl Read) -> Result<(usize, Vec<Vec<f64>>)> {
    let io = |e| Error::io("<binary dump>", e);
    let mut head = [0u8; 24];
    r.read_exact(&mut head).map_err(io)?;
    if &head[..4] != BINARY_MAGIC {
        return Err(Error::Argument("not a WCEB dump".into()));
    }
    let version = u32::from_le_bytes(head[4..8].try_into().unwrap());
    if version != BINARY_VERSION {
        return Err(Error::Argument(format!("unsupported WCEB version {version}")));
    }
    let nodes = u64::from_le_bytes(head[8..16].try_into().unwrap()) as usize;
    let n_paths = u64::from_le_bytes(head[16..24].try_into().unwrap()) as usize;
    let mut buf = [0u8; 8];
    let mut rows = Vec::with_capacity(n_paths);
    for _ in 0..n_paths {
        let mut row = Vec::with_capacity(nodes);
        for _ in 0..nodes {
            r.read_exact(&mut buf).map_err(io)?;
            row.push(f64::from_le_bytes(buf));
        }
        rows.push(row);
    }
    Ok((nodes, rows))
}

/// Column name of a coefficient: `X_0` for the zero index, otherwise the
/// dense entries, e.g. `X_1_0_1`.
pub fn coefficient_column(m: &MultiIndex) -> String {
    if m.is_zero() {
        return "X_0".into();
    }
    let dense = m.dense(m.max_coordinate());
    let parts: Vec<String> = dense.iter().map(u32::to_string).collect();
    format!("X_{}", parts.join("_"))
}

/// Wide table with a `t` column and one column per coefficient.
pub fn write_propagator_csv(w: &mut impl Write, meta: &ArtifactMeta, sol: &PropagatorSolution) -> std::io::Result<()> {
    meta.write_csv_header(w)?;
    let mut header = vec!["t".to_string()];
    header.extend(sol.index_set.iter().map(coefficient_column));
    writeln!(w, "{}", header.join(","))?;
    let mut line = String::new();
    for j in 0..sol.grid.nodes() {
        line.clear();
        line.push_str(&sol.grid.node(j).to_string());
        for r in 0..sol.rows() {
            line.push(',');
            line.push_str(&sol.value(r, j).to_string());
        }
        writeln!(w, "{line}")?;
    }
    Ok(())
}

pub fn endpoint_label(spec: &BridgeSpec) -> String {
    format!("(0,{})->({},{})", spec.eta, spec.horizon, spec.theta)
}

/// One KS comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KsRecord {
    pub comparison: String,
    pub endpoint_pair: String,
    #[serde(rename = "L")]
    pub l: usize,
    pub d: f64,
    pub p_value: f64,
    pub n: usize,
    pub m: usize,
    pub seed: u64,
}

impl KsRecord {
    pub fn new(comparison: impl Into<String>, spec: &BridgeSpec, l: usize, ks: &KsResult, seed: u64) -> Self {
        KsRecord {
            comparison: comparison.into(),
            endpoint_pair: endpoint_label(spec),
            l,
            d: ks.d,
            p_value: ks.p_value,
            n: ks.n,
            m: ks.m,
            seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KsReport {
    pub meta: ArtifactMeta,
    #[serde(flatten)]
    pub record: KsRecord,
}

/// Matched quantiles of two samples at one time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QqReport {
    pub meta: ArtifactMeta,
    pub comparison: String,
    pub label_a: String,
    pub label_b: String,
    pub eval_time: f64,
    pub q_a: Vec<f64>,
    pub q_b: Vec<f64>,
}

pub fn write_json<T: Serialize>(w: &mut impl Write, value: &T) -> Result<()> {
    serde_json::to_writer_pretty(&mut *w, value)?;
    writeln!(w).map_err(|e| Error::io("<json>", e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::propagator::TimeGrid;

    fn path(id: u64, values: Vec<f64>) -> BridgePath {
        let grid = TimeGrid::new(1.0, values.len() - 1).unwrap();
        BridgePath {
            grid,
            values,
            spec: BridgeSpec::new(0.0, 1.0, 1.0).unwrap(),
            seed: 0,
            path: id,
        }
    }

    fn meta() -> ArtifactMeta {
        ArtifactMeta::new(&serde_json::json!({"a": 1}), 7).unwrap()
    }

    #[test]
    fn config_hash_is_stable_sha256() {
        let m = ArtifactMeta::new(&serde_json::json!({}), 0).unwrap();
        // SHA-256 of "{}".
        assert_eq!(m.config_hash, "44136fa355b3678a1146ad16f7e8649e94fb4fc21fe77e8310c060f61caaff8a");
    }

    #[test]
    fn csv_round_trip() {
        let paths = vec![path(0, vec![0.0, 0.25, 1.0]), path(1, vec![0.0, -0.1, 1.0])];
        let mut buf = Vec::new();
        write_paths_csv(&mut buf, &meta(), &paths, None).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("# config_hash="));
        assert!(text.contains("\npath_id,t,y\n0,0,0\n0,0.5,0.25\n"));
        assert!(!text.contains('\r'));
        let rows = read_paths_csv(&buf[..]).unwrap();
        assert_eq!(rows.len(), 6);
        assert_eq!(rows[4], PathRow { path_id: 1, t: 0.5, y: -0.1 });
    }

    #[test]
    fn csv_with_attempts() {
        let paths = vec![path(3, vec![0.0, 0.5, 1.0])];
        let mut buf = Vec::new();
        write_paths_csv(&mut buf, &meta(), &paths, Some(&[4])).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.contains("path_id,t,y,attempts\n3,0,0,4\n"));
        assert_eq!(read_paths_csv(&buf[..]).unwrap().len(), 3);
    }

    #[test]
    fn csv_schema_errors() {
        assert!(read_paths_csv(&b"a,b,c\n1,2,3\n"[..]).is_err());
        assert!(read_paths_csv(&b"# only comments\n"[..]).is_err());
    }

    #[test]
    fn binary_round_trip() {
        let paths = vec![path(0, vec![0.0, 0.3, 1.0]), path(1, vec![0.0, 0.7, 1.0])];
        let mut buf = Vec::new();
        write_paths_binary(&mut buf, &paths).unwrap();
        assert_eq!(&buf[..4], b"WCEB");
        assert_eq!(buf.len(), 24 + 6 * 8);
        let (nodes, rows) = read_paths_binary(&mut &buf[..]).unwrap();
        assert_eq!(nodes, 3);
        assert_eq!(rows[1], vec![0.0, 0.7, 1.0]);
    }

    #[test]
    fn column_names() {
        assert_eq!(coefficient_column(&MultiIndex::zero(3)), "X_0");
        assert_eq!(coefficient_column(&MultiIndex::from_dense(&[1, 0, 1], 3).unwrap()), "X_1_0_1");
        assert_eq!(coefficient_column(&MultiIndex::from_dense(&[0, 2], 5).unwrap()), "X_0_2");
    }

    #[test]
    fn ks_json_schema() {
        let ks = KsResult { d: 0.1, p_value: 0.4, n: 10, m: 12 };
        let rec = KsRecord::new("wce_vs_exact_ou", &BridgeSpec::new(0.0, 1.0, 1.0).unwrap(), 100, &ks, 5);
        let report = KsReport { meta: meta(), record: rec };
        let v = serde_json::to_value(&report).unwrap();
        for key in ["comparison", "endpoint_pair", "L", "d", "p_value", "n", "m", "seed", "meta"] {
            assert!(v.get(key).is_some(), "missing {key}");
        }
        assert_eq!(v["endpoint_pair"], "(0,0)->(1,1)");
        let back: KsReport = serde_json::from_value(v).unwrap();
        assert_eq!(back, report);
    }
}
