//! Charts between the suspension space and the L-shaped polygon.
//!
//! In base-A units the suspension space already *is* the polygon
//! `{0 <= x < 1, 0 <= y < 1} ∪ {1 <= x < b, 0 <= y < q}`, so the charts are
//! the identity on interior points. What this module adds is the boundary
//! bookkeeping: the three edge identifications that close the polygon into a
//! translation surface, applied with the closed-open convention.

use crate::error::{CoreError, Result};
use crate::flow::{roof_at, FlowContext, Roof};
use crate::num::{Coord, QLin, QValue};
use crate::rank_one::{apply_t_in, Stage};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, Zero};
use std::cmp::Ordering;
use std::sync::Arc;

/// A point of the L-shaped polygon in base-A units (`x0 = 1`).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PolygonPoint {
    pub x: Coord,
    pub y: QLin,
}

fn one() -> Coord {
    BigRational::from_integer(BigInt::from(1))
}

/// Canonicalizes a suspension point into the half-open polygon domain.
///
/// Interior points map to themselves. A point sitting exactly on the roof
/// (`y = f(x)`) is the same surface point as `(T(x), 0)` and is returned in
/// that canonical form; this may refine the stage.
pub fn to_polygon(
    ctx: &FlowContext,
    stage: Arc<Stage>,
    x: &Coord,
    y: &QLin,
) -> Result<(PolygonPoint, Arc<Stage>)> {
    if x.is_negative() || *x >= stage.support_end() {
        return Err(CoreError::InvalidSpec(format!("x = {x} outside the base")));
    }
    if y.sign(&ctx.q)? == Ordering::Less {
        return Err(CoreError::InvalidSpec("negative height".into()));
    }
    let roof = roof_at(x).qlin();
    match y.cmp_q(&roof, &ctx.q)? {
        Ordering::Less => Ok((
            PolygonPoint {
                x: x.clone(),
                y: y.clone(),
            },
            stage,
        )),
        Ordering::Equal => {
            // identification (3): (x, f(x)) ~ (T(x), 0)
            let step = apply_t_in(stage, ctx.spec.as_ref(), x, &ctx.budgets)?;
            Ok((
                PolygonPoint {
                    x: step.x,
                    y: QLin::zero(),
                },
                step.stage,
            ))
        }
        Ordering::Greater => Err(CoreError::InvalidSpec(format!(
            "point ({x}, {y}) lies above the roof"
        ))),
    }
}

/// Reads a polygon point back as a suspension point, resolving wall
/// representatives:
/// - `x = b` with `y <= q` is the right edge, identified with `x = 0`;
/// - `x = 1` with `y >= q` is the notch wall, identified with the left edge
///   at the same height.
///
/// Interior points map to themselves, so the round trip with [`to_polygon`]
/// is the identity away from the boundary.
pub fn from_polygon(
    ctx: &FlowContext,
    stage: Arc<Stage>,
    pt: &PolygonPoint,
) -> Result<(Coord, QLin, Arc<Stage>)> {
    if pt.x.is_negative() || pt.y.sign(&ctx.q)? == Ordering::Less {
        return Err(CoreError::InvalidSpec("point outside the polygon".into()));
    }
    let b = stage.support_end();
    let q_lin = QLin::q();
    // identification (1): {b} x [0, q] ~ {0} x [0, q]
    if pt.x == b {
        if pt.y.cmp_q(&q_lin, &ctx.q)? == Ordering::Greater {
            return Err(CoreError::InvalidSpec("right wall only reaches height q".into()));
        }
        return Ok((BigRational::zero(), pt.y.clone(), stage));
    }
    // identification (2): {1} x [q, 1] ~ {0} x [q, 1]
    if pt.x == one() && pt.y.cmp_q(&q_lin, &ctx.q)? != Ordering::Less {
        if pt.y.cmp_q(&QLin::one(), &ctx.q)? == Ordering::Greater {
            return Err(CoreError::InvalidSpec("notch wall only reaches height 1".into()));
        }
        return Ok((BigRational::zero(), pt.y.clone(), stage));
    }
    let roof = roof_at(&pt.x).qlin();
    if pt.y.cmp_q(&roof, &ctx.q)? != Ordering::Less {
        return Err(CoreError::InvalidSpec(format!(
            "point ({}, {}) lies on or above the roof; use to_polygon for roof points",
            pt.x, pt.y
        )));
    }
    Ok((pt.x.clone(), pt.y.clone(), stage))
}

/// Corner list of the polygon outline for rendering, counterclockwise from
/// the origin, using the stage's partial support end for `b`.
pub fn polygon_vertices(b_partial: &Coord, q: &QValue) -> Vec<(f64, f64)> {
    use num_traits::ToPrimitive;
    let b = b_partial.to_f64().unwrap_or(f64::NAN);
    let qv = q.to_f64();
    vec![
        (0.0, 0.0),
        (b, 0.0),
        (b, qv),
        (1.0, qv),
        (1.0, 1.0),
        (0.0, 1.0),
    ]
}

/// The three identification rules as labelled edge pairs for rendering.
/// Each entry is `(label, first edge, second edge)` with edges as
/// `((x0, y0), (x1, y1))` in base-A units.
pub fn identification_edges(
    b_partial: &Coord,
    q: &QValue,
) -> Vec<(&'static str, ((f64, f64), (f64, f64)), ((f64, f64), (f64, f64)))> {
    use num_traits::ToPrimitive;
    let b = b_partial.to_f64().unwrap_or(f64::NAN);
    let qv = q.to_f64();
    vec![
        (
            "vertical-low",
            ((0.0, 0.0), (0.0, qv)),
            ((b, 0.0), (b, qv)),
        ),
        (
            "vertical-high",
            ((0.0, qv), (0.0, 1.0)),
            ((1.0, qv), (1.0, 1.0)),
        ),
        (
            "roof-to-base",
            ((0.0, 1.0), (1.0, 1.0)),
            ((1.0, qv), (b, qv)),
        ),
    ]
}

/// Roof kind over a polygon x-coordinate (handy for renderers).
pub fn roof_kind(x: &Coord) -> Roof {
    roof_at(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::num::rat;
    use crate::rank_one::build_stage;
    use crate::staircase::Staircase;
    use crate::Budgets;
    use num_traits::Zero;

    fn ctx() -> FlowContext {
        FlowContext::new(
            Arc::new(Staircase::classical()),
            QValue::inv_sqrt2(),
            Budgets::default(),
        )
    }

    #[test]
    fn interior_round_trip() {
        let c = ctx();
        let st = Arc::new(build_stage(c.spec.as_ref(), 3, &c.budgets).unwrap());
        for k in 1..40i64 {
            let x = rat(k, 20); // covers both regions of the stage-3 support
            if x >= st.support_end() {
                break;
            }
            let y = QLin::new(rat(k % 7, 16), rat(0, 1));
            let roof = roof_at(&x).qlin();
            if y.cmp_q(&roof, &c.q).unwrap() != std::cmp::Ordering::Less {
                continue;
            }
            let (pt, st2) = to_polygon(&c, st.clone(), &x, &y).unwrap();
            assert_eq!((pt.x.clone(), pt.y.clone()), (x.clone(), y.clone()));
            let (bx, by, _) = from_polygon(&c, st2, &pt).unwrap();
            assert_eq!((bx, by), (x, y));
        }
    }

    #[test]
    fn roof_point_identifies_with_base() {
        let c = ctx();
        let st = Arc::new(build_stage(c.spec.as_ref(), 3, &c.budgets).unwrap());
        let x = rat(1, 10);
        let (pt, st2) = to_polygon(&c, st, &x, &QLin::one()).unwrap();
        assert!(pt.y.is_zero());
        let expected = crate::rank_one::apply_t(c.spec.as_ref(), &x, 8, &c.budgets).unwrap();
        assert_eq!(pt.x, expected);
        drop(st2);
        // spacer roof point
        let c2 = ctx();
        let st = Arc::new(build_stage(c2.spec.as_ref(), 3, &c2.budgets).unwrap());
        let sx = rat(11, 8); // spacer region
        let (pt, _) = to_polygon(&c2, st, &sx, &QLin::q()).unwrap();
        assert!(pt.y.is_zero());
    }

    #[test]
    fn wall_identifications() {
        let c = ctx();
        let st = Arc::new(build_stage(c.spec.as_ref(), 3, &c.budgets).unwrap());
        let b = st.support_end();
        // right wall at height q/2 folds to the left edge
        let pt = PolygonPoint {
            x: b,
            y: QLin::new(rat(0, 1), rat(1, 2)),
        };
        let (x, y, _) = from_polygon(&c, st.clone(), &pt).unwrap();
        assert!(x.is_zero());
        assert_eq!(y, QLin::new(rat(0, 1), rat(1, 2)));
        // notch wall above q folds to the left edge too
        let pt = PolygonPoint {
            x: rat(1, 1),
            y: QLin::new(rat(9, 10), rat(0, 1)),
        };
        let (x, _, _) = from_polygon(&c, st, &pt).unwrap();
        assert!(x.is_zero());
    }

    #[test]
    fn outline_geometry() {
        let c = ctx();
        let st = build_stage(c.spec.as_ref(), 4, &c.budgets).unwrap();
        let verts = polygon_vertices(&st.support_end(), &c.q);
        assert_eq!(verts.len(), 6);
        assert_eq!(verts[0], (0.0, 0.0));
        assert!((verts[1].0 - 2.25).abs() < 1e-12); // b_4 = 54/24
        let edges = identification_edges(&st.support_end(), &c.q);
        assert_eq!(edges.len(), 3);
    }
}
