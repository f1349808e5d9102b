//! L²-torsion of compact 3-manifolds from the volumes of the hyperbolic
//! pieces of their JSJ decomposition.

use std::f64::consts::PI;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const CENSUS_JSON: &str = include_str!("../../../../data/census.json");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PieceKind {
    Seifert,
    Hyperbolic,
}

const KINDS: &str = "seifert, hyperbolic";

impl PieceKind {
    fn parse(s: &str) -> Option<Self> {
        match s {
            "seifert" => Some(PieceKind::Seifert),
            "hyperbolic" => Some(PieceKind::Hyperbolic),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct JsjPiece {
    pub kind: PieceKind,
    pub volume: f64,
    pub label: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct JsjManifest {
    pub name: String,
    pub boundary_tori: u32,
    pub pieces: Vec<JsjPiece>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
struct RawPiece {
    kind: String,
    #[serde(default)]
    volume: Option<f64>,
    #[serde(default)]
    label: String,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
struct RawManifest {
    name: String,
    #[serde(default)]
    boundary_tori: u32,
    pieces: Vec<RawPiece>,
}

fn piece(kind: &str, volume: Option<f64>, label: String, at: &str) -> Result<JsjPiece> {
    let kind = PieceKind::parse(kind)
        .ok_or_else(|| Error::schema(format!("{at}.kind"), format!("unknown kind '{kind}'; allowed kinds: {KINDS}")))?;
    let volume = match (kind, volume) {
        (_, Some(v)) if !v.is_finite() => return Err(Error::schema(format!("{at}.volume"), "volume must be finite")),
        (_, Some(v)) if v < 0.0 => return Err(Error::schema(format!("{at}.volume"), "volume must be nonnegative")),
        (PieceKind::Hyperbolic, None) => {
            return Err(Error::schema(format!("{at}.volume"), "hyperbolic pieces need a volume"))
        }
        (PieceKind::Hyperbolic, Some(v)) if v == 0.0 => {
            return Err(Error::schema(format!("{at}.volume"), "hyperbolic pieces have positive volume"))
        }
        (PieceKind::Hyperbolic, Some(v)) => v,
        (PieceKind::Seifert, _) => 0.0,
    };
    Ok(JsjPiece { kind, volume, label })
}

impl TryFrom<RawManifest> for JsjManifest {
    type Error = Error;
    fn try_from(raw: RawManifest) -> Result<Self> {
        let pieces = raw
            .pieces
            .into_iter()
            .enumerate()
            .map(|(i, p)| piece(&p.kind, p.volume, p.label, &format!("pieces[{i}]")))
            .collect::<Result<_>>()?;
        Ok(JsjManifest { name: raw.name, boundary_tori: raw.boundary_tori, pieces })
    }
}

impl JsjManifest {
    pub fn from_json(src: &str) -> Result<Self> {
        let raw: RawManifest = serde_json::from_str(src)
            .map_err(|e| Error::schema(format!("line {}, column {}", e.line(), e.column()), e.to_string()))?;
        raw.try_into()
    }

    /// CSV with header `kind,volume,label`; the name and torus count come
    /// from `# name: …` and `# boundaryTori: …` comment lines.
    pub fn from_csv(src: &str) -> Result<Self> {
        let mut name = String::new();
        let mut boundary_tori = 0;
        for (i, line) in src.lines().enumerate() {
            let Some(rest) = line.trim().strip_prefix('#') else { continue };
            let Some((key, value)) = rest.split_once(':') else { continue };
            let value = value.trim();
            match key.trim() {
                "name" => name = value.to_string(),
                "boundaryTori" => {
                    boundary_tori = value.parse().map_err(|_| {
                        Error::schema(format!("line {}", i + 1), format!("boundaryTori must be a nonnegative integer, got '{value}'"))
                    })?
                }
                _ => {}
            }
        }
        let mut reader = csv::ReaderBuilder::new().comment(Some(b'#')).trim(csv::Trim::All).from_reader(src.as_bytes());
        let headers = reader.headers().map_err(|e| Error::schema("header", e.to_string()))?.clone();
        if headers.iter().collect::<Vec<_>>() != ["kind", "volume", "label"] {
            return Err(Error::schema("header", format!("expected 'kind,volume,label', got '{}'", headers.iter().collect::<Vec<_>>().join(","))));
        }
        let mut pieces = Vec::new();
        for rec in reader.records() {
            let rec = rec.map_err(|e| {
                let line = e.position().map_or(0, |p| p.line());
                Error::schema(format!("line {line}"), e.to_string())
            })?;
            let at = format!("line {}", rec.position().map_or(0, |p| p.line()));
            let volume = match rec[1].trim() {
                "" => None,
                v => Some(v.parse::<f64>().map_err(|_| Error::schema(format!("{at}.volume"), format!("not a number: '{v}'")))?),
            };
            pieces.push(piece(&rec[0], volume, rec[2].to_string(), &at)?);
        }
        Ok(JsjManifest { name, boundary_tori, pieces })
    }

    /// The disjoint union of two manifolds.
    pub fn disjoint_union(&self, other: &JsjManifest) -> JsjManifest {
        JsjManifest {
            name: format!("{} ⊔ {}", self.name, other.name),
            boundary_tori: self.boundary_tori + other.boundary_tori,
            pieces: self.pieces.iter().chain(&other.pieces).cloned().collect(),
        }
    }

    pub fn hyperbolic_volume(&self) -> f64 {
        self.pieces.iter().filter(|p| p.kind == PieceKind::Hyperbolic).map(|p| p.volume).sum()
    }
}

/// Reads a manifest, as JSON or CSV by extension, sniffing the content for
/// other extensions.
pub fn load_manifest(path: impl AsRef<Path>) -> Result<JsjManifest> {
    let path = path.as_ref();
    let src = std::fs::read_to_string(path)?;
    let ext = path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase);
    let res = match ext.as_deref() {
        Some("json") => JsjManifest::from_json(&src),
        Some("csv") => JsjManifest::from_csv(&src),
        _ if src.trim_start().starts_with('{') => JsjManifest::from_json(&src),
        _ => JsjManifest::from_csv(&src),
    };
    res.map_err(|e| match e {
        Error::Schema { location, message } => Error::Schema { location: format!("{}: {location}", path.display()), message },
        other => other,
    })
}

/// `−(3π)^{−1} Σ vol(N_i)` over the hyperbolic pieces.
pub fn torsion_3manifold(m: &JsjManifest) -> f64 {
    -m.hyperbolic_volume() / (3.0 * PI)
}

pub fn is_graph_manifold(m: &JsjManifest) -> bool {
    m.pieces.iter().all(|p| p.kind != PieceKind::Hyperbolic)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct JsjReport {
    pub name: String,
    pub torsion: f64,
    pub hyperbolic_volume: f64,
    pub graph_manifold: bool,
    pub boundary_tori: u32,
    pub pieces: usize,
    /// Hypotheses on the manifold that the manifest cannot certify.
    pub assumptions: Vec<&'static str>,
}

pub fn report(m: &JsjManifest) -> JsjReport {
    JsjReport {
        name: m.name.clone(),
        torsion: torsion_3manifold(m),
        hyperbolic_volume: m.hyperbolic_volume(),
        graph_manifold: is_graph_manifold(m),
        boundary_tori: m.boundary_tori,
        pieces: m.pieces.len(),
        assumptions: vec![
            "compact, orientable, irreducible, with empty or incompressible toral boundary",
            "infinite fundamental group; the L²-Betti numbers vanish",
            "the Novikov-Shubin invariants are positive",
        ],
    }
}

#[derive(Deserialize)]
#[serde(rename_all = "camelCase")]
struct RawCensus {
    version: u32,
    note: String,
    manifolds: Vec<RawManifest>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Census {
    pub version: u32,
    pub note: String,
    pub manifolds: Vec<JsjManifest>,
}

impl Census {
    pub fn from_json(src: &str) -> Result<Self> {
        let raw: RawCensus = serde_json::from_str(src)
            .map_err(|e| Error::schema(format!("line {}, column {}", e.line(), e.column()), e.to_string()))?;
        let manifolds = raw
            .manifolds
            .into_iter()
            .enumerate()
            .map(|(i, m)| {
                JsjManifest::try_from(m).map_err(|e| match e {
                    Error::Schema { location, message } => Error::Schema { location: format!("manifolds[{i}].{location}"), message },
                    other => other,
                })
            })
            .collect::<Result<_>>()?;
        Ok(Census { version: raw.version, note: raw.note, manifolds })
    }

    pub fn shipped() -> Self {
        Self::from_json(CENSUS_JSON).expect("shipped census is valid")
    }

    pub fn get(&self, name: &str) -> Option<&JsjManifest> {
        self.manifolds.iter().find(|m| m.name == name)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn hyperbolic(v: f64) -> JsjPiece {
        JsjPiece { kind: PieceKind::Hyperbolic, volume: v, label: String::new() }
    }

    fn seifert() -> JsjPiece {
        JsjPiece { kind: PieceKind::Seifert, volume: 0.0, label: String::new() }
    }

    fn manifest(pieces: Vec<JsjPiece>) -> JsjManifest {
        JsjManifest { name: "m".into(), boundary_tori: 0, pieces }
    }

    #[test]
    fn formula() {
        assert_eq!(torsion_3manifold(&manifest(vec![seifert(), seifert()])), 0.0);
        assert_eq!(torsion_3manifold(&manifest(vec![hyperbolic(3.0 * PI)])), -1.0);
        assert!(is_graph_manifold(&manifest(vec![])));
        assert!(!is_graph_manifold(&manifest(vec![seifert(), hyperbolic(1.0)])));
    }

    #[test]
    fn census() {
        let c = Census::shipped();
        let m004 = c.get("m004").unwrap();
        let vol = m004.pieces[0].volume;
        assert_eq!(torsion_3manifold(m004), -vol / (3.0 * PI));
        assert!((vol - 2.0298832).abs() < 1e-7);
        assert!(is_graph_manifold(c.get("trefoil").unwrap()));
        let b = c.get("borromean").unwrap().hyperbolic_volume();
        let w = c.get("whitehead").unwrap().hyperbolic_volume();
        assert!((b - 2.0 * w).abs() < 1e-14);
    }

    #[test]
    fn json_validation() {
        let ok = r#"{"name": "x", "boundaryTori": 1, "pieces": [{"kind": "hyperbolic", "volume": 2.0, "label": "a"}]}"#;
        assert_eq!(JsjManifest::from_json(ok).unwrap().pieces.len(), 1);
        let neg = r#"{"name": "x", "pieces": [{"kind": "seifert", "volume": 0}, {"kind": "hyperbolic", "volume": -1}]}"#;
        let e = JsjManifest::from_json(neg).unwrap_err().to_string();
        assert!(e.contains("pieces[1].volume") && e.contains("volume must be nonnegative"), "{e}");
        let sol = r#"{"name": "x", "pieces": [{"kind": "sol", "volume": 1}]}"#;
        let e = JsjManifest::from_json(sol).unwrap_err().to_string();
        assert!(e.contains("seifert, hyperbolic"), "{e}");
        let e = JsjManifest::from_json("{\n  \"name\": \"x\",\n  \"pieces\": [\n    {\"kind\": 3}\n  ]\n}").unwrap_err().to_string();
        assert!(e.contains("line 4"), "{e}");
        assert!(JsjManifest::from_json(r#"{"name": "x", "pieces": [], "extra": 1}"#).is_err());
        assert!(JsjManifest::from_json(r#"{"name": "x", "pieces": [{"kind": "hyperbolic"}]}"#).is_err());
    }

    #[test]
    fn csv_input() {
        let src = "# name: glued\n# boundaryTori: 2\nkind,volume,label\nhyperbolic,2.029883212819307,left\nseifert,0,middle\nhyperbolic,3.663862376708876,right\n";
        let m = JsjManifest::from_csv(src).unwrap();
        assert_eq!((m.name.as_str(), m.boundary_tori, m.pieces.len()), ("glued", 2, 3));
        assert!((m.hyperbolic_volume() - 5.693745589528183).abs() < 1e-14);
        let e = JsjManifest::from_csv("kind,volume,label\nseifert,0,a\nsol,1,b\n").unwrap_err().to_string();
        assert!(e.contains("line 3") && e.contains("allowed kinds"), "{e}");
        assert!(JsjManifest::from_csv("kind,vol,label\n").is_err());
        assert!(JsjManifest::from_csv("kind,volume,label\nhyperbolic,abc,x\n").is_err());
    }

    #[test]
    fn files() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.csv");
        std::fs::write(&p, "kind,volume,label\nhyperbolic,1.5,a\n").unwrap();
        assert_eq!(load_manifest(&p).unwrap().hyperbolic_volume(), 1.5);
        let q = dir.path().join("bad.json");
        std::fs::write(&q, r#"{"name": "x", "pieces": [{"kind": "hyperbolic", "volume": -2}]}"#).unwrap();
        assert!(load_manifest(&q).unwrap_err().to_string().contains("bad.json"));
        assert!(matches!(load_manifest(dir.path().join("missing.json")), Err(Error::Io(_))));
    }

    proptest! {
        #[test]
        fn additive_and_nonpositive(a in proptest::collection::vec(0.01f64..20.0, 0..6), b in proptest::collection::vec(0.01f64..20.0, 0..6), s in 0usize..3) {
            let ma = manifest(a.iter().map(|&v| hyperbolic(v)).chain((0..s).map(|_| seifert())).collect());
            let mb = manifest(b.iter().map(|&v| hyperbolic(v)).collect());
            let u = ma.disjoint_union(&mb);
            let (ta, tb, tu) = (torsion_3manifold(&ma), torsion_3manifold(&mb), torsion_3manifold(&u));
            prop_assert!((tu - (ta + tb)).abs() <= 1e-12 * tu.abs().max(1.0));
            prop_assert!(tu <= 0.0);
            prop_assert_eq!(tu == 0.0, is_graph_manifold(&u));
            let doubled = manifest(a.iter().map(|&v| hyperbolic(2.0 * v)).collect());
            prop_assert!((torsion_3manifold(&doubled) - 2.0 * ta).abs() <= 1e-12 * ta.abs().max(1.0));
        }
    }
}
