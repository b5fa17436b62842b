//! Singular-curve descriptions: data model, parsing, validation and genus
//! accounting.
//!
//! A curve is given by its desingularization (genus `base_genus`), a base
//! point for the Abel map and, for every singular point, the list of its
//! preimages together with the pole orders of the higher-order generators
//! attached to each preimage. The first preimage of every singular point is
//! the distinguished one: simple-pair differentials have residue `-1` there
//! and `+1` at the other preimage.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::point::Point;
use crate::wire::{WireComplex, WirePoint};
use crate::C64;

/// Two preimages closer than this (chordal distance) are considered equal.
const COINCIDENCE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct SingularPoint {
    pub preimages: Vec<Point>,
    /// `higher_orders[j]` lists the pole orders `n` at preimage `j`, strictly
    /// increasing. Always has one entry per preimage.
    pub higher_orders: Vec<Vec<u32>>,
}

impl SingularPoint {
    /// A singular point with `preimages` and no higher-order generators.
    pub fn node(preimages: Vec<Point>) -> Self {
        let higher_orders = vec![Vec::new(); preimages.len()];
        SingularPoint {
            preimages,
            higher_orders,
        }
    }

    /// A unibranch singular point with the given pole orders.
    pub fn cusp(preimage: Point, orders: Vec<u32>) -> Self {
        SingularPoint {
            preimages: vec![preimage],
            higher_orders: vec![orders],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CurveSpec {
    pub base_genus: u32,
    pub base_point: Point,
    /// Modulus of the torus; present iff `base_genus == 1`.
    pub tau: Option<C64>,
    pub singular_points: Vec<SingularPoint>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct GenusReport {
    pub g_tilde: u32,
    /// Number of multiplicative (simple-pair) directions.
    #[serde(rename = "M")]
    pub m: usize,
    /// Number of additive (higher-order) directions.
    #[serde(rename = "N")]
    pub n: usize,
    pub g_arith: usize,
    /// Number of zeros of a generic translated pulled-back theta section.
    pub section_degree: usize,
}

/// Which singular differential a coordinate belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FormKind {
    /// Simple poles at preimage `0` (residue -1) and preimage `j >= 1`
    /// (residue +1) of singular point `i`.
    SimplePair { i: usize, j: usize },
    /// Pole of order `n + 1` at preimage `j` of singular point `i`, where `n`
    /// is the `h`-th higher order listed there.
    HigherOrder { i: usize, j: usize, h: usize },
}

/// A singular differential together with its position in the flat
/// enumeration (`0..M` for simple pairs, `0..N` for higher orders).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct FormIndex {
    pub kind: FormKind,
    pub flat_index: usize,
}

impl CurveSpec {
    /// Validated constructor.
    pub fn new(
        base_genus: u32,
        base_point: Point,
        tau: Option<C64>,
        singular_points: Vec<SingularPoint>,
    ) -> Result<Self> {
        let curve = CurveSpec {
            base_genus,
            base_point,
            tau,
            singular_points,
        };
        curve.validate()?;
        Ok(curve)
    }

    pub fn validate(&self) -> Result<()> {
        match (self.base_genus, self.tau) {
            (1, None) => return Err(Error::parse("tau", "required when base_genus = 1")),
            (1, Some(t)) if !(t.im > 0.0) => {
                return Err(Error::Validation(format!(
                    "tau must have positive imaginary part, got {t}"
                )))
            }
            (g, Some(_)) if g != 1 => {
                return Err(Error::parse("tau", "only allowed when base_genus = 1"))
            }
            _ => {}
        }

        let mut infinite = 0usize;
        for (i, sp) in self.singular_points.iter().enumerate() {
            if sp.preimages.is_empty() {
                return Err(Error::Validation(format!(
                    "singular point {i} has no preimages"
                )));
            }
            if sp.higher_orders.len() != sp.preimages.len() {
                return Err(Error::Validation(format!(
                    "singular point {i}: {} preimages but {} higher-order lists",
                    sp.preimages.len(),
                    sp.higher_orders.len()
                )));
            }
            if sp.preimages.len() == 1 && sp.higher_orders[0].is_empty() {
                return Err(Error::Validation(format!(
                    "singular point {i} has a single preimage and no higher-order generator, so it is not singular"
                )));
            }
            for (j, orders) in sp.higher_orders.iter().enumerate() {
                if orders.first() == Some(&0) {
                    return Err(Error::Validation(format!(
                        "singular point {i}, preimage {j}: pole orders must be positive"
                    )));
                }
                if orders.windows(2).any(|w| w[0] >= w[1]) {
                    return Err(Error::Validation(format!(
                        "singular point {i}, preimage {j}: pole orders {orders:?} are not strictly increasing"
                    )));
                }
            }
            infinite += sp.preimages.iter().filter(|p| p.is_infinite()).count();
        }

        if self.base_genus > 0 {
            if self.base_point.is_infinite()
                || self
                    .singular_points
                    .iter()
                    .flat_map(|s| &s.preimages)
                    .any(Point::is_infinite)
            {
                return Err(Error::Validation(
                    "\"inf\" is only meaningful when base_genus = 0".into(),
                ));
            }
        } else if infinite > 1 {
            return Err(Error::Validation(format!(
                "{infinite} preimages are at infinity; at most one is allowed"
            )));
        }

        let labelled: Vec<(String, Point)> = self
            .singular_points
            .iter()
            .enumerate()
            .flat_map(|(i, sp)| {
                sp.preimages
                    .iter()
                    .enumerate()
                    .map(move |(j, p)| (format!("p[{i}][{j}]"), *p))
            })
            .chain(std::iter::once(("base_point".to_string(), self.base_point)))
            .collect();
        for a in 0..labelled.len() {
            for b in a + 1..labelled.len() {
                if self.coincide(&labelled[a].1, &labelled[b].1) {
                    return Err(Error::Validation(format!(
                        "{} and {} coincide ({})",
                        labelled[a].0, labelled[b].0, labelled[a].1
                    )));
                }
            }
        }
        Ok(())
    }

    fn coincide(&self, a: &Point, b: &Point) -> bool {
        match (self.tau, a, b) {
            (Some(tau), Point::Finite(x), Point::Finite(y)) if self.base_genus == 1 => {
                let d = crate::periods::reduce_to_fundamental_domain(*x - *y, tau);
                // distance to the nearest lattice point
                [C64::new(0.0, 0.0), C64::new(1.0, 0.0), tau, tau + 1.0]
                    .iter()
                    .any(|corner| (d - corner).norm() < COINCIDENCE_TOL)
            }
            _ => a.chordal_distance(b) < COINCIDENCE_TOL,
        }
    }

    pub fn is_smooth(&self) -> bool {
        self.singular_points.is_empty()
    }

    pub fn preimage(&self, i: usize, j: usize) -> Point {
        self.singular_points[i].preimages[j]
    }

    pub fn pole_order(&self, i: usize, j: usize, h: usize) -> u32 {
        self.singular_points[i].higher_orders[j][h]
    }

    /// Simple-pair differentials in flat order.
    pub fn simple_pairs(&self) -> Vec<FormIndex> {
        let mut out = Vec::new();
        for (i, sp) in self.singular_points.iter().enumerate() {
            for j in 1..sp.preimages.len() {
                out.push(FormIndex {
                    kind: FormKind::SimplePair { i, j },
                    flat_index: out.len(),
                });
            }
        }
        out
    }

    /// Higher-order differentials in flat order.
    pub fn higher_orders(&self) -> Vec<FormIndex> {
        let mut out = Vec::new();
        for (i, sp) in self.singular_points.iter().enumerate() {
            for (j, orders) in sp.higher_orders.iter().enumerate() {
                for h in 0..orders.len() {
                    out.push(FormIndex {
                        kind: FormKind::HigherOrder { i, j, h },
                        flat_index: out.len(),
                    });
                }
            }
        }
        out
    }

    /// Every preimage point, in document order.
    pub fn all_preimages(&self) -> Vec<Point> {
        self.singular_points
            .iter()
            .flat_map(|s| s.preimages.iter().copied())
            .collect()
    }

    pub fn to_document(&self) -> String {
        let doc = CurveDocument {
            base_genus: self.base_genus,
            base_point: self.base_point.into(),
            tau: self.tau.map(Into::into),
            singular_points: self
                .singular_points
                .iter()
                .map(|sp| SingularPointDocument {
                    preimages: sp.preimages.iter().map(|p| (*p).into()).collect(),
                    higher_orders: Some(sp.higher_orders.clone()),
                })
                .collect(),
        };
        serde_json::to_string_pretty(&doc).expect("curve document serializes")
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CurveDocument {
    base_genus: u32,
    base_point: WirePoint,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    tau: Option<WireComplex>,
    singular_points: Vec<SingularPointDocument>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SingularPointDocument {
    preimages: Vec<WirePoint>,
    #[serde(default)]
    higher_orders: Option<Vec<Vec<u32>>>,
}

/// Parses and validates a curve-spec document.
pub fn parse_curve_spec(text: &str) -> Result<CurveSpec> {
    let doc: CurveDocument = serde_json::from_str(text).map_err(|e| {
        let msg = e.to_string();
        let field = [
            "base_genus",
            "base_point",
            "tau",
            "singular_points",
            "preimages",
            "higher_orders",
        ]
        .into_iter()
        .find(|f| msg.contains(f))
        .unwrap_or("document");
        Error::parse(field, msg)
    })?;

    let base_point = doc.base_point.to_point("base_point")?;
    let mut singular_points = Vec::with_capacity(doc.singular_points.len());
    for (i, sp) in doc.singular_points.iter().enumerate() {
        let preimages = sp
            .preimages
            .iter()
            .enumerate()
            .map(|(j, w)| w.to_point(&format!("singular_points[{i}].preimages[{j}]")))
            .collect::<Result<Vec<_>>>()?;
        let higher_orders = match &sp.higher_orders {
            None => vec![Vec::new(); preimages.len()],
            Some(h) if h.is_empty() => vec![Vec::new(); preimages.len()],
            Some(h) if h.len() == preimages.len() => h.clone(),
            Some(h) => {
                return Err(Error::parse(
                    format!("singular_points[{i}].higher_orders"),
                    format!("expected {} lists, found {}", preimages.len(), h.len()),
                ))
            }
        };
        singular_points.push(SingularPoint {
            preimages,
            higher_orders,
        });
    }
    CurveSpec::new(
        doc.base_genus,
        base_point,
        doc.tau.map(Into::into),
        singular_points,
    )
}

pub fn genus_accounting(curve: &CurveSpec) -> GenusReport {
    let m = curve
        .singular_points
        .iter()
        .map(|s| s.preimages.len() - 1)
        .sum::<usize>();
    let n = curve
        .singular_points
        .iter()
        .flat_map(|s| &s.higher_orders)
        .map(Vec::len)
        .sum::<usize>();
    let total_order = curve
        .singular_points
        .iter()
        .flat_map(|s| s.higher_orders.iter().flatten())
        .map(|&n| n as usize)
        .sum::<usize>();
    let g = curve.base_genus as usize;
    GenusReport {
        g_tilde: curve.base_genus,
        m,
        n,
        g_arith: g + m + n,
        section_degree: g + m + total_order,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const NODAL: &str = r#"{
        "base_genus": 0,
        "base_point": [1, 0],
        "singular_points": [ { "preimages": ["inf", [0, 0]] } ]
    }"#;

    const CUSPIDAL: &str = r#"{
        "base_genus": 0,
        "base_point": "inf",
        "singular_points": [ { "preimages": [[0, 0]], "higher_orders": [[1]] } ]
    }"#;

    const X5Y2: &str = r#"{
        "base_genus": 0,
        "base_point": "inf",
        "singular_points": [ { "preimages": [[0, 0]], "higher_orders": [[1, 3]] } ]
    }"#;

    #[test]
    fn nodal_cubic_has_one_multiplicative_direction() {
        let c = parse_curve_spec(NODAL).unwrap();
        let r = genus_accounting(&c);
        assert_eq!(
            (r.g_tilde, r.m, r.n, r.g_arith, r.section_degree),
            (0, 1, 0, 1, 1)
        );
    }

    #[test]
    fn cuspidal_cubic_has_one_additive_direction() {
        let c = parse_curve_spec(CUSPIDAL).unwrap();
        let r = genus_accounting(&c);
        assert_eq!((r.m, r.n), (0, 1));
        assert_eq!(c.base_point, Point::Infinity);
    }

    #[test]
    fn x5_y2_degree_exceeds_arithmetic_genus() {
        let c = parse_curve_spec(X5Y2).unwrap();
        let r = genus_accounting(&c);
        assert_eq!(
            (r.g_tilde, r.m, r.n, r.g_arith, r.section_degree),
            (0, 0, 2, 2, 4)
        );
    }

    #[test]
    fn genus_one_node() {
        let c = CurveSpec::new(
            1,
            Point::finite(0.1, 0.1),
            Some(C64::new(0.2, 1.1)),
            vec![SingularPoint::node(vec![
                Point::finite(0.3, 0.2),
                Point::finite(0.7, 0.6),
            ])],
        )
        .unwrap();
        let r = genus_accounting(&c);
        assert_eq!(
            (r.g_tilde, r.m, r.n, r.g_arith, r.section_degree),
            (1, 1, 0, 2, 2)
        );
    }

    #[test]
    fn smooth_torus_is_valid() {
        let text = r#"{ "base_genus": 1, "base_point": [0.1, 0.2], "tau": [0, 1], "singular_points": [] }"#;
        let c = parse_curve_spec(text).unwrap();
        assert!(c.is_smooth());
        assert_eq!(genus_accounting(&c).g_arith, 1);
    }

    #[test]
    fn duplicated_preimage_is_rejected() {
        let text = r#"{ "base_genus": 0, "base_point": [1, 0],
            "singular_points": [ { "preimages": [[2, 0], [3, 0]] }, { "preimages": [[2, 0], [5, 0]] } ] }"#;
        match parse_curve_spec(text) {
            Err(Error::Validation(msg)) => {
                assert!(msg.contains("p[0][0]") && msg.contains("p[1][0]"), "{msg}")
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn preimage_at_base_point_is_rejected() {
        let text = r#"{ "base_genus": 0, "base_point": "inf", "singular_points": [ { "preimages": ["inf", [0, 0]] } ] }"#;
        assert!(matches!(parse_curve_spec(text), Err(Error::Validation(_))));
    }

    #[test]
    fn torus_points_are_compared_modulo_the_lattice() {
        let text = r#"{ "base_genus": 1, "base_point": [0.5, 0.5], "tau": [0, 1],
            "singular_points": [ { "preimages": [[0.25, 0.25], [1.25, 1.25]] } ] }"#;
        assert!(matches!(parse_curve_spec(text), Err(Error::Validation(_))));
    }

    #[test]
    fn two_points_at_infinity_are_rejected() {
        let text = r#"{ "base_genus": 0, "base_point": [1, 0],
            "singular_points": [ { "preimages": ["inf", [0, 0]] }, { "preimages": ["inf", [5, 0]] } ] }"#;
        assert!(parse_curve_spec(text).is_err());
    }

    #[test]
    fn lone_preimage_without_orders_is_not_singular() {
        let text = r#"{ "base_genus": 0, "base_point": [1, 0], "singular_points": [ { "preimages": [[0, 0]] } ] }"#;
        assert!(matches!(parse_curve_spec(text), Err(Error::Validation(_))));
    }

    #[test]
    fn orders_must_increase() {
        let text = r#"{ "base_genus": 0, "base_point": "inf",
            "singular_points": [ { "preimages": [[0, 0]], "higher_orders": [[3, 1]] } ] }"#;
        assert!(matches!(parse_curve_spec(text), Err(Error::Validation(_))));
    }

    #[test]
    fn schema_errors_name_the_field() {
        let text = r#"{ "base_genus": 0, "base_point": "nowhere", "singular_points": [] }"#;
        match parse_curve_spec(text) {
            Err(Error::Parse { field, .. }) => assert_eq!(field, "base_point"),
            other => panic!("unexpected {other:?}"),
        }
        let text = r#"{ "base_genus": 1, "base_point": [0, 0], "singular_points": [] }"#;
        match parse_curve_spec(text) {
            Err(Error::Parse { field, .. }) => assert_eq!(field, "tau"),
            other => panic!("unexpected {other:?}"),
        }
        let text = r#"{ "base_point": [0, 0], "singular_points": [] }"#;
        match parse_curve_spec(text) {
            Err(Error::Parse { field, .. }) => assert_eq!(field, "base_genus"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn flat_enumeration_follows_document_order() {
        let c = parse_curve_spec(
            r#"{ "base_genus": 0, "base_point": [9, 0], "singular_points": [
                { "preimages": [[0, 0], [1, 0], [2, 0]], "higher_orders": [[], [2], []] },
                { "preimages": [[5, 0]], "higher_orders": [[1, 4]] } ] }"#,
        )
        .unwrap();
        let pairs: Vec<_> = c.simple_pairs().iter().map(|f| f.kind).collect();
        assert_eq!(
            pairs,
            vec![
                FormKind::SimplePair { i: 0, j: 1 },
                FormKind::SimplePair { i: 0, j: 2 }
            ]
        );
        let orders: Vec<_> = c
            .higher_orders()
            .iter()
            .map(|f| (f.kind, f.flat_index))
            .collect();
        assert_eq!(
            orders,
            vec![
                (FormKind::HigherOrder { i: 0, j: 1, h: 0 }, 0),
                (FormKind::HigherOrder { i: 1, j: 0, h: 0 }, 1),
                (FormKind::HigherOrder { i: 1, j: 0, h: 1 }, 2),
            ]
        );
        let r = genus_accounting(&c);
        assert_eq!((r.m, r.n, r.section_degree), (2, 3, 2 + 2 + 1 + 4));
    }
}
