//! Newton polyhedron of `P` over the global domain `|t1|, |t2| >= 1`:
//! the convex hull of the exponent set translated by the recession cone
//! `-R_+^2`. Its vertices form a monotone staircase, its facet normals live
//! in the third quadrant, and the (disjointified) dual vertex cones tile the
//! nonnegative dyadic index quadrant. Boundedness of the transform is decided
//! by the even-vertex criterion on this polyhedron.

use num_traits::Signed;
use serde::Serialize;

use crate::polynomial::Polynomial;

/// Half-space `normal . x >= offset` containing the polyhedron. Normals are
/// primitive with both entries <= 0.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Facet {
    pub normal: (i64, i64),
    pub offset: i64,
}

/// Vertices in ascending-`m1` order together with the facet fan.
///
/// Facets are ordered so that vertex `i` lies exactly on facets `i` and
/// `i+1`; facet 0 is the horizontal recession facet (normal `(0,-1)`) and the
/// last is the vertical one (normal `(-1,0)`). The dual cone of vertex `i` is
/// spanned by the negated normals of its two facets.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NewtonPolyhedron {
    pub vertices: Vec<(u32, u32)>,
    pub facets: Vec<Facet>,
    /// Per vertex, the pair of primitive rays spanning its dual cone,
    /// expressed in the positive quadrant (negated facet normals).
    pub dual_vertex_cones: Vec<((i64, i64), (i64, i64))>,
}

/// Outcome of the even-vertex criterion.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct BoundednessVerdict {
    pub bounded: bool,
    /// First vertex (canonical order) with both components odd, if any.
    pub witness: Option<(u32, u32)>,
}

/// JSON-facing report combining the polyhedron and the verdict.
#[derive(Debug, Clone, Serialize)]
pub struct NewtonReport {
    pub vertices: Vec<[u32; 2]>,
    pub facets: Vec<FacetReport>,
    pub bounded: bool,
    pub witness: Option<[u32; 2]>,
}

#[derive(Debug, Clone, Serialize)]
pub struct FacetReport {
    pub normal: [i64; 2],
    pub offset: i64,
}

/// Builds the polyhedron for a nonzero polynomial.
pub fn build(p: &Polynomial) -> NewtonPolyhedron {
    assert!(!p.is_zero(), "Newton polyhedron of the zero polynomial");
    let vertices = staircase_vertices(&p.support());
    let mut facets = Vec::with_capacity(vertices.len() + 1);
    let max_m2 = vertices[0].1 as i64;
    facets.push(Facet {
        normal: (0, -1),
        offset: -max_m2,
    });
    for w in vertices.windows(2) {
        let (a1, b1) = (w[0].0 as i64, w[0].1 as i64);
        let (a2, b2) = (w[1].0 as i64, w[1].1 as i64);
        // inward normal of the edge, pointing into the third quadrant
        let mut q = (b2 - b1, a1 - a2);
        let g = gcd(q.0.abs() as u64, q.1.abs() as u64) as i64;
        q = (q.0 / g, q.1 / g);
        debug_assert!(q.0 < 0 && q.1 < 0);
        facets.push(Facet {
            normal: q,
            offset: q.0 * a1 + q.1 * b1,
        });
    }
    let max_m1 = vertices.last().unwrap().0 as i64;
    facets.push(Facet {
        normal: (-1, 0),
        offset: -max_m1,
    });
    let dual_vertex_cones = (0..vertices.len())
        .map(|i| {
            let u = facets[i].normal;
            let v = facets[i + 1].normal;
            ((-u.0, -u.1), (-v.0, -v.1))
        })
        .collect();
    NewtonPolyhedron {
        vertices,
        facets,
        dual_vertex_cones,
    }
}

/// Extreme points of `Ch(support + (-R_+^2))`: Pareto-maximal points filtered
/// to the upper-right convex chain. Sorted by `m1` ascending, `m2` strictly
/// descending.
fn staircase_vertices(support: &[(u32, u32)]) -> Vec<(u32, u32)> {
    // Pareto filter: drop points dominated componentwise by another.
    let mut pts: Vec<(u32, u32)> = support
        .iter()
        .copied()
        .filter(|&(a, b)| {
            !support
                .iter()
                .any(|&(c, d)| (c, d) != (a, b) && c >= a && d >= b)
        })
        .collect();
    pts.sort();
    // Upper-right convex chain: walking with m1 ascending / m2 descending,
    // keep only points where the boundary turns strictly.
    let mut chain: Vec<(u32, u32)> = Vec::with_capacity(pts.len());
    for &p in &pts {
        while chain.len() >= 2 {
            let a = chain[chain.len() - 2];
            let b = chain[chain.len() - 1];
            if cross(a, b, p) >= 0 {
                chain.pop();
            } else {
                break;
            }
        }
        chain.push(p);
    }
    chain
}

fn cross(a: (u32, u32), b: (u32, u32), c: (u32, u32)) -> i64 {
    let (ax, ay) = (a.0 as i64, a.1 as i64);
    let (bx, by) = (b.0 as i64, b.1 as i64);
    let (cx, cy) = (c.0 as i64, c.1 as i64);
    (bx - ax) * (cy - ay) - (by - ay) * (cx - ax)
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a.max(1)
    } else {
        gcd(b, a % b)
    }
}

impl NewtonPolyhedron {
    /// Even-vertex criterion: bounded iff every vertex has an even component.
    pub fn decide_boundedness(&self) -> BoundednessVerdict {
        let witness = self
            .vertices
            .iter()
            .copied()
            .find(|&(m1, m2)| m1 % 2 == 1 && m2 % 2 == 1);
        BoundednessVerdict {
            bounded: witness.is_none(),
            witness,
        }
    }

    /// Index of the vertex whose disjointified dual cone contains `j`.
    ///
    /// Cones are scanned in vertex order and the first containing cone wins,
    /// which puts a lattice point on a shared boundary ray into the cone of
    /// the lower-indexed vertex.
    pub fn dual_face_of(&self, j: (u64, u64)) -> usize {
        let (j1, j2) = (j.0 as i128, j.1 as i128);
        for (i, &(u, v)) in self.dual_vertex_cones.iter().enumerate() {
            // j between rays u and v (u rotates clockwise toward v):
            // cross(u, j) <= 0 and cross(v, j) >= 0.
            let cu = u.0 as i128 * j2 - u.1 as i128 * j1;
            let cv = v.0 as i128 * j2 - v.1 as i128 * j1;
            if cu <= 0 && cv >= 0 {
                return i;
            }
        }
        unreachable!("dual vertex cones tile the nonnegative quadrant")
    }

    /// Samples `|P(2^{j1} x1, 2^{j2} x2)| / 2^{j . m}` on a grid of
    /// `x in [1,2]^2` and checks the max against a coefficient-derived
    /// bracket `[1/C, C]`. A diagnostic for the vertex-domination property;
    /// meaningful once `j` sits deep in the vertex's dual cone.
    pub fn dominant_vertex_check(
        &self,
        p: &Polynomial,
        j: (u64, u64),
        samples: usize,
    ) -> bool {
        let vertex = self.vertices[self.dual_face_of(j)];
        let n = samples.max(2);
        let mut max_ratio = 0f64;
        for a in 0..n {
            for b in 0..n {
                let x1 = 1.0 + a as f64 / (n - 1) as f64;
                let x2 = 1.0 + b as f64 / (n - 1) as f64;
                // P(2^{j1}x1, 2^{j2}x2) / 2^{j.m} = sum_n c_n 2^{j.(n-m)} x^n
                let mut val = 0f64;
                for t in p.terms() {
                    let (n1, n2) = t.exponent;
                    let de = j.0 as i64 * (n1 as i64 - vertex.0 as i64)
                        + j.1 as i64 * (n2 as i64 - vertex.1 as i64);
                    let c = bigint_to_f64(&t.coefficient);
                    val += c * 2f64.powi(de as i32) * x1.powi(n1 as i32) * x2.powi(n2 as i32);
                }
                max_ratio = max_ratio.max(val.abs());
            }
        }
        let bracket = domination_bracket(p);
        max_ratio <= bracket && max_ratio >= 1.0 / bracket
    }

    pub fn report(&self, verdict: &BoundednessVerdict) -> NewtonReport {
        NewtonReport {
            vertices: self.vertices.iter().map(|&(a, b)| [a, b]).collect(),
            facets: self
                .facets
                .iter()
                .map(|f| FacetReport {
                    normal: [f.normal.0, f.normal.1],
                    offset: f.offset,
                })
                .collect(),
            bounded: verdict.bounded,
            witness: verdict.witness.map(|(a, b)| [a, b]),
        }
    }
}

fn domination_bracket(p: &Polynomial) -> f64 {
    let d = (p.deg_t1() + p.deg_t2()) as i32;
    let coeff_sum: f64 = p.terms().map(|t| bigint_to_f64(&t.coefficient).abs()).sum();
    2f64.powi(d + 1) * coeff_sum.max(1.0)
}

fn bigint_to_f64(c: &num_bigint::BigInt) -> f64 {
    use num_traits::ToPrimitive;
    c.to_f64().unwrap_or(if c.is_negative() {
        f64::NEG_INFINITY
    } else {
        f64::INFINITY
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn hull(s: &str) -> NewtonPolyhedron {
        build(&Polynomial::parse(s).unwrap())
    }

    #[test]
    fn middle_point_on_segment_is_not_extreme() {
        let n = hull("t1^2 + t1*t2 + t2^2");
        assert_eq!(n.vertices, vec![(0, 2), (2, 0)]);
    }

    #[test]
    fn two_vertex_example() {
        let n = hull("t1^3*t2^2 + t1*t2^5");
        assert_eq!(n.vertices, vec![(1, 5), (3, 2)]);
    }

    #[test]
    fn single_monomial_orthant() {
        let n = hull("7*t1^4*t2^3");
        assert_eq!(n.vertices, vec![(4, 3)]);
        assert_eq!(
            n.facets,
            vec![
                Facet {
                    normal: (0, -1),
                    offset: -3
                },
                Facet {
                    normal: (-1, 0),
                    offset: -4
                },
            ]
        );
    }

    #[test]
    fn hull_soundness() {
        for s in [
            "t1^3*t2^2 + t1*t2^5",
            "t1^2 + t1*t2 + t2^2",
            "t1^6 + t1^3*t2^3 + t2^6 + t1*t2",
            "t1^2*t2 + 4*t2^4 + 3*t1^5",
        ] {
            let p = Polynomial::parse(s).unwrap();
            let n = build(&p);
            for m in p.support() {
                for f in &n.facets {
                    assert!(
                        f.normal.0 * m.0 as i64 + f.normal.1 * m.1 as i64 >= f.offset,
                        "{s}: {m:?} violates {f:?}"
                    );
                }
            }
        }
    }

    #[test]
    fn decide_examples() {
        let v = hull("t1*t2").decide_boundedness();
        assert!(!v.bounded);
        assert_eq!(v.witness, Some((1, 1)));

        let v = hull("t1^2 + t2^2").decide_boundedness();
        assert!(v.bounded);
        assert_eq!(v.witness, None);

        let v = hull("t1^3*t2^2 + t1*t2^5").decide_boundedness();
        assert!(!v.bounded);
        assert_eq!(v.witness, Some((1, 5)));
    }

    #[test]
    fn decision_parity_single_monomials() {
        for m1 in 0..6u32 {
            for m2 in 0..6u32 {
                if m1 == 0 && m2 == 0 {
                    continue;
                }
                let p = Polynomial::from_terms([((m1, m2), 1.into())]);
                let v = build(&p).decide_boundedness();
                assert_eq!(v.bounded, m1 % 2 == 0 || m2 % 2 == 0);
            }
        }
    }

    #[test]
    fn dual_face_assignment() {
        let n = hull("t1^2 + t2^2");
        // vertices: [(0,2), (2,0)]
        assert_eq!(n.vertices[n.dual_face_of((10, 1))], (2, 0));
        assert_eq!(n.vertices[n.dual_face_of((1, 10))], (0, 2));
        // boundary ray j1 = j2 goes to the lower-indexed vertex
        assert_eq!(n.dual_face_of((5, 5)), 0);
    }

    #[test]
    fn single_monomial_every_j_maps_to_it() {
        let n = hull("t1^2*t2");
        for j in [(0u64, 0u64), (5, 1), (1, 9), (100, 100)] {
            assert_eq!(n.dual_face_of(j), 0);
        }
    }

    #[test]
    fn dual_face_partitions_grid() {
        for s in ["t1^2 + t2^2", "t1^3*t2^2 + t1*t2^5", "t1^4 + t1^2*t2^2 + t2^6"] {
            let n = hull(s);
            for j1 in 0..64u64 {
                for j2 in 0..64u64 {
                    let i = n.dual_face_of((j1, j2));
                    assert!(i < n.vertices.len());
                }
            }
        }
    }

    #[test]
    fn domination_examples() {
        let p = Polynomial::parse("t1^2 + t2^2").unwrap();
        let n = build(&p);
        assert!(n.dominant_vertex_check(&p, (10, 1), 32));
        assert!(n.dominant_vertex_check(&p, (0, 0), 32));

        let p = Polynomial::parse("t1^2*t2").unwrap();
        let n = build(&p);
        assert!(n.dominant_vertex_check(&p, (7, 3), 32));
    }
}
