//! Space file format (JSON) and grayscale PGM ingestion.
//!
//! ```json
//! {"type":"graph","nodes":[{"id":0,"nu":1.0}],"edges":[{"u":0,"v":1,"w":1.0}]}
//! {"type":"grid","dim":2,"shape":[64,64],"h":1.0,"omega":[1.0,...],
//!  "norm":{"alpha":2.0,"scales":[1.0,1.0]}}
//! ```
//!
//! Node ids may be arbitrary; they are sorted and renumbered 0..n on load, so
//! load(save(s)) is the identity on the canonical representation. `alpha`
//! accepts a number or the string `"inf"`.

use super::{DiscreteSpace, FinslerGridSpace, MinkowskiNorm, NodeFunction, NormField, WeightedGraphSpace};
use crate::{Error, Result};
use serde::{Deserialize, Serialize};

#[derive(Debug, Serialize, Deserialize)]
struct NodeEntry {
    id: u64,
    nu: f64,
}

#[derive(Debug, Serialize, Deserialize)]
struct EdgeEntry {
    u: u64,
    v: u64,
    w: f64,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(untagged)]
enum AlphaRepr {
    Num(f64),
    Word(String),
}

#[derive(Debug, Serialize, Deserialize)]
struct NormEntry {
    alpha: AlphaRepr,
    scales: Vec<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
enum SpaceFile {
    Graph { nodes: Vec<NodeEntry>, edges: Vec<EdgeEntry> },
    Grid { dim: usize, shape: Vec<usize>, h: f64, omega: Vec<f64>, norm: NormEntry },
}

fn alpha_from(repr: &AlphaRepr) -> Result<f64> {
    match repr {
        AlphaRepr::Num(a) => Ok(*a),
        AlphaRepr::Word(s) => {
            if s == "inf" || s == "Inf" || s == "infinity" {
                Ok(f64::INFINITY)
            } else {
                Err(Error::Parse(format!("unrecognized norm exponent {s:?}")))
            }
        }
    }
}

fn alpha_to(alpha: f64) -> AlphaRepr {
    if alpha.is_infinite() {
        AlphaRepr::Word("inf".into())
    } else {
        AlphaRepr::Num(alpha)
    }
}

pub fn space_from_json(text: &str) -> Result<DiscreteSpace> {
    let file: SpaceFile = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    match file {
        SpaceFile::Graph { nodes, edges } => {
            let mut ids: Vec<u64> = nodes.iter().map(|n| n.id).collect();
            ids.sort_unstable();
            ids.dedup();
            if ids.len() != nodes.len() {
                return Err(Error::Parse("duplicate node id".into()));
            }
            let index_of = |id: u64| -> Result<usize> {
                ids.binary_search(&id).map_err(|_| Error::Parse(format!("unknown node id {id}")))
            };
            let mut nu = vec![0.0; ids.len()];
            for n in &nodes {
                nu[index_of(n.id)?] = n.nu;
            }
            let mut list = Vec::with_capacity(edges.len());
            for e in &edges {
                list.push((index_of(e.u)?, index_of(e.v)?, e.w));
            }
            Ok(DiscreteSpace::Graph(WeightedGraphSpace::new(nu, list)?))
        }
        SpaceFile::Grid { dim, shape, h, omega, norm } => {
            if shape.len() != dim {
                return Err(Error::Parse(format!("shape {shape:?} does not match dim {dim}")));
            }
            let alpha = alpha_from(&norm.alpha)?;
            let nm = MinkowskiNorm::new(alpha, norm.scales)?;
            Ok(DiscreteSpace::Grid(FinslerGridSpace::new(shape, h, omega, NormField::Uniform(nm))?))
        }
    }
}

pub fn space_to_json(space: &DiscreteSpace) -> String {
    let file = match space {
        DiscreteSpace::Graph(g) => SpaceFile::Graph {
            nodes: (0..g.node_count()).map(|i| NodeEntry { id: i as u64, nu: g.nu(i) }).collect(),
            edges: g
                .edges()
                .iter()
                .map(|e| EdgeEntry { u: e.a as u64, v: e.b as u64, w: e.w })
                .collect(),
        },
        DiscreteSpace::Grid(g) => {
            let nm = match g.norms() {
                NormField::Uniform(nm) => nm,
                // The file format carries one global norm; per-node norms are
                // an in-memory construction.
                NormField::PerNode(v) => &v[0],
            };
            SpaceFile::Grid {
                dim: g.dim(),
                shape: g.shape().to_vec(),
                h: g.h(),
                omega: g.omega().to_vec(),
                norm: NormEntry { alpha: alpha_to(nm.alpha()), scales: nm.scales().to_vec() },
            }
        }
    };
    serde_json::to_string_pretty(&file).expect("space serialization cannot fail")
}

/// A grayscale image in PGM units.
#[derive(Debug, Clone, PartialEq)]
pub struct PgmImage {
    pub width: usize,
    pub height: usize,
    pub maxval: u16,
    pub pixels: Vec<u16>,
}

impl PgmImage {
    /// Pixel values scaled to [0, 1], in row-major node order for a grid with
    /// `shape = [width, height]`.
    pub fn to_node_function(&self) -> NodeFunction {
        NodeFunction::new(self.pixels.iter().map(|&p| p as f64 / self.maxval as f64).collect())
    }

    /// Quantize values (clamped to [0, 1]) back to this image's maxval.
    pub fn from_node_function(u: &NodeFunction, width: usize, height: usize, maxval: u16) -> Self {
        assert_eq!(u.len(), width * height);
        let pixels = u
            .values
            .iter()
            .map(|&v| (v.clamp(0.0, 1.0) * maxval as f64).round() as u16)
            .collect();
        Self { width, height, maxval, pixels }
    }
}

/// Parse P2 (ASCII) or P5 (binary) PGM.
pub fn read_pgm(bytes: &[u8]) -> Result<PgmImage> {
    let mut pos = 0usize;
    let mut tokens: Vec<String> = Vec::new();
    // Header: magic, width, height, maxval, with # comments.
    while tokens.len() < 4 && pos < bytes.len() {
        let b = bytes[pos];
        if b == b'#' {
            while pos < bytes.len() && bytes[pos] != b'\n' {
                pos += 1;
            }
        } else if b.is_ascii_whitespace() {
            pos += 1;
        } else {
            let start = pos;
            while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() && bytes[pos] != b'#' {
                pos += 1;
            }
            tokens.push(String::from_utf8_lossy(&bytes[start..pos]).into_owned());
        }
    }
    if tokens.len() < 4 {
        return Err(Error::Parse("truncated PGM header".into()));
    }
    let magic = tokens[0].as_str();
    let width: usize = tokens[1].parse().map_err(|_| Error::Parse("bad PGM width".into()))?;
    let height: usize = tokens[2].parse().map_err(|_| Error::Parse("bad PGM height".into()))?;
    let maxval: u32 = tokens[3].parse().map_err(|_| Error::Parse("bad PGM maxval".into()))?;
    if width == 0 || height == 0 || maxval == 0 || maxval > 65535 {
        return Err(Error::Parse("PGM dimensions out of range".into()));
    }
    let n = width * height;
    let pixels: Vec<u16> = match magic {
        "P2" => {
            let rest = String::from_utf8_lossy(&bytes[pos..]);
            let vals: std::result::Result<Vec<u16>, _> =
                rest.split_whitespace().take(n).map(|t| t.parse::<u16>()).collect();
            vals.map_err(|_| Error::Parse("bad PGM sample".into()))?
        }
        "P5" => {
            pos += 1; // single whitespace after maxval
            if maxval < 256 {
                if bytes.len() < pos + n {
                    return Err(Error::Parse("truncated PGM data".into()));
                }
                bytes[pos..pos + n].iter().map(|&b| b as u16).collect()
            } else {
                if bytes.len() < pos + 2 * n {
                    return Err(Error::Parse("truncated PGM data".into()));
                }
                (0..n).map(|i| u16::from_be_bytes([bytes[pos + 2 * i], bytes[pos + 2 * i + 1]])).collect()
            }
        }
        other => return Err(Error::Parse(format!("unsupported PGM magic {other:?}"))),
    };
    if pixels.len() != n {
        return Err(Error::Parse("truncated PGM data".into()));
    }
    if pixels.iter().any(|&p| p as u32 > maxval) {
        return Err(Error::Parse("PGM sample exceeds maxval".into()));
    }
    Ok(PgmImage { width, height, maxval: maxval as u16, pixels })
}

/// Serialize as ASCII P2 (deterministic output).
pub fn write_pgm_p2(img: &PgmImage) -> String {
    let mut out = format!("P2\n{} {}\n{}\n", img.width, img.height, img.maxval);
    for row in img.pixels.chunks(img.width) {
        let line: Vec<String> = row.iter().map(|p| p.to_string()).collect();
        out.push_str(&line.join(" "));
        out.push('\n');
    }
    out
}

/// Node-function CSV: one value per line.
pub fn node_function_from_csv(text: &str) -> Result<Vec<f64>> {
    let mut out = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let t = line.trim();
        if t.is_empty() {
            continue;
        }
        let v: f64 = t
            .parse()
            .map_err(|_| Error::Parse(format!("line {}: not a number: {t:?}", lineno + 1)))?;
        if !v.is_finite() {
            return Err(Error::Parse(format!("line {}: non-finite value", lineno + 1)));
        }
        out.push(v);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn graph_roundtrip() {
        let s = DiscreteSpace::Graph(
            WeightedGraphSpace::new(vec![1.0, 2.0, 0.5], vec![(0, 1, 1.0), (1, 2, 0.25)]).unwrap(),
        );
        let text = space_to_json(&s);
        let s2 = space_from_json(&text).unwrap();
        assert_eq!(space_to_json(&s2), text);
    }

    #[test]
    fn grid_roundtrip_with_infinite_alpha() {
        let g = FinslerGridSpace::new(
            vec![2, 2],
            0.5,
            vec![1.0, 2.0, 3.0, 4.0],
            NormField::Uniform(MinkowskiNorm::new(f64::INFINITY, vec![1.0, 2.0]).unwrap()),
        )
        .unwrap();
        let s = DiscreteSpace::Grid(g);
        let text = space_to_json(&s);
        assert!(text.contains("\"inf\""));
        let s2 = space_from_json(&text).unwrap();
        assert_eq!(space_to_json(&s2), text);
    }

    #[test]
    fn graph_with_sparse_ids() {
        let text = r#"{"type":"graph",
            "nodes":[{"id":10,"nu":1.0},{"id":3,"nu":2.0}],
            "edges":[{"u":10,"v":3,"w":0.5}]}"#;
        let s = space_from_json(text).unwrap();
        match &s {
            DiscreteSpace::Graph(g) => {
                assert_eq!(g.node_count(), 2);
                assert_eq!(g.nu(0), 2.0); // id 3 sorts first
                assert_eq!(g.edges()[0].w, 0.5);
            }
            _ => panic!("expected graph"),
        }
    }

    #[test]
    fn rejects_malformed() {
        assert!(space_from_json("{}").is_err());
        assert!(space_from_json(r#"{"type":"graph","nodes":[{"id":0,"nu":1.0},{"id":0,"nu":1.0}],"edges":[]}"#).is_err());
        assert!(space_from_json(r#"{"type":"grid","dim":2,"shape":[2],"h":1.0,"omega":[1,1],"norm":{"alpha":2.0,"scales":[1,1]}}"#).is_err());
    }

    #[test]
    fn pgm_p2_and_p5() {
        let p2 = b"P2\n# comment\n3 2\n255\n0 128 255\n10 20 30\n";
        let img = read_pgm(p2).unwrap();
        assert_eq!(img.width, 3);
        assert_eq!(img.height, 2);
        assert_eq!(img.pixels, vec![0, 128, 255, 10, 20, 30]);

        let mut p5 = b"P5 3 2 255\n".to_vec();
        p5.extend_from_slice(&[0, 128, 255, 10, 20, 30]);
        let img5 = read_pgm(&p5).unwrap();
        assert_eq!(img.pixels, img5.pixels);

        let back = write_pgm_p2(&img);
        let img2 = read_pgm(back.as_bytes()).unwrap();
        assert_eq!(img, img2);
    }

    #[test]
    fn pgm_16bit() {
        let mut p5 = b"P5\n2 1\n65535\n".to_vec();
        p5.extend_from_slice(&[0x01, 0x00, 0xff, 0xfe]);
        let img = read_pgm(&p5).unwrap();
        assert_eq!(img.pixels, vec![256, 65534]);
        let u = img.to_node_function();
        assert!((u.values[0] - 256.0 / 65535.0).abs() < 1e-12);
    }

    #[test]
    fn csv_parse() {
        assert_eq!(node_function_from_csv("1.0\n-2.5\n\n3\n").unwrap(), vec![1.0, -2.5, 3.0]);
        assert!(node_function_from_csv("1.0\nxyz\n").is_err());
    }
}
