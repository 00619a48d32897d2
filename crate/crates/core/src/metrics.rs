//! Multi-objective progress metrics: nadir reference points, exact
//! hypervolume for up to three objectives, normalized hypervolume series,
//! Pareto-front extraction, and CSV exports.
//!
//! The hypervolume of a front is the Lebesgue measure of the union of
//! boxes `[point, reference]`. Points are clipped to the reference first,
//! then reduced to their non-dominated subset; 3-D volumes are computed
//! exactly by sweeping the third objective and accumulating 2-D staircase
//! areas, so no approximation enters the main path.

use crate::evolution::engine::GenerationRecord;
use crate::evolution::{dominates, ObjectiveVector};
use std::io::Write;
use thiserror::Error;

/// Nadir-style reference point: componentwise worst first-generation
/// objectives, inflated by 1% so boundary points keep a nonzero
/// contribution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReferencePoint(pub [f64; 3]);

/// Inflation applied to the componentwise maximum.
pub const NADIR_INFLATION: f64 = 1.01;

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("cannot build a reference point from an empty population")]
    EmptyPopulation,
    #[error("run log is empty")]
    EmptyLog,
}

/// Componentwise maximum of the first generation's objectives, inflated
/// by [`NADIR_INFLATION`].
pub fn nadir_from_first_generation(
    objectives: &[ObjectiveVector],
) -> Result<ReferencePoint, MetricsError> {
    if objectives.is_empty() {
        return Err(MetricsError::EmptyPopulation);
    }
    let mut max = [f64::NEG_INFINITY; 3];
    for o in objectives {
        for (m, v) in o.as_array().iter().enumerate() {
            max[m] = max[m].max(*v);
        }
    }
    for v in max.iter_mut() {
        *v *= NADIR_INFLATION;
    }
    Ok(ReferencePoint(max))
}

/// Exact hypervolume of `points` against `reference`, for 1 to 3
/// dimensions (minimisation). Points weakly outside the reference box are
/// clipped to the reference and then contribute nothing.
pub fn hypervolume(points: &[Vec<f64>], reference: &[f64]) -> f64 {
    let d = reference.len();
    assert!((1..=3).contains(&d), "hypervolume supports 1..=3 objectives");
    let clipped: Vec<Vec<f64>> = points
        .iter()
        .map(|p| {
            assert_eq!(p.len(), d, "point dimension mismatch");
            p.iter().zip(reference).map(|(&v, &r)| v.min(r)).collect()
        })
        .collect();
    let front = filter_non_dominated(&clipped);
    match d {
        1 => front
            .iter()
            .map(|p| reference[0] - p[0])
            .fold(0.0, f64::max),
        2 => staircase_area(
            &front.iter().map(|p| [p[0], p[1]]).collect::<Vec<_>>(),
            reference[0],
            reference[1],
        ),
        _ => sweep_volume(&front, reference),
    }
}

/// Hypervolume of objective vectors against a reference point.
pub fn hypervolume3(points: &[ObjectiveVector], reference: &ReferencePoint) -> f64 {
    let pts: Vec<Vec<f64>> = points.iter().map(|o| o.as_array().to_vec()).collect();
    hypervolume(&pts, &reference.0)
}

fn filter_non_dominated(points: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let dominated_by = |a: &[f64], b: &[f64]| -> bool {
        // b weakly better everywhere and strictly better somewhere
        b.iter().zip(a).all(|(x, y)| x <= y) && b.iter().zip(a).any(|(x, y)| x < y)
    };
    points
        .iter()
        .enumerate()
        .filter(|(i, p)| {
            !points.iter().enumerate().any(|(j, q)| {
                dominated_by(p, q) || (j < *i && q.as_slice() == p.as_slice())
            })
        })
        .map(|(_, p)| p.clone())
        .collect()
}

/// Area dominated by 2-D points within `[.., (rx, ry)]`: classic
/// staircase after keeping the 2-D non-dominated subset.
fn staircase_area(points: &[[f64; 2]], rx: f64, ry: f64) -> f64 {
    if points.is_empty() {
        return 0.0;
    }
    let mut sorted: Vec<[f64; 2]> = points.to_vec();
    sorted.sort_by(|a, b| a[0].partial_cmp(&b[0]).unwrap().then(a[1].partial_cmp(&b[1]).unwrap()));
    let mut area = 0.0;
    let mut y_prev = ry;
    for p in sorted {
        if p[1] < y_prev {
            area += (rx - p[0]) * (y_prev - p[1]);
            y_prev = p[1];
        }
    }
    area
}

/// Exact 3-D volume: sort by the third coordinate and integrate the 2-D
/// staircase area of the accumulated prefix over each slab.
fn sweep_volume(points: &[Vec<f64>], reference: &[f64]) -> f64 {
    if points.is_empty() {
        return 0.0;
    }
    let mut sorted: Vec<&Vec<f64>> = points.iter().collect();
    sorted.sort_by(|a, b| a[2].partial_cmp(&b[2]).unwrap());
    let mut volume = 0.0;
    let mut prefix: Vec<[f64; 2]> = Vec::new();
    let mut i = 0;
    while i < sorted.len() {
        let z = sorted[i][2];
        while i < sorted.len() && sorted[i][2] == z {
            prefix.push([sorted[i][0], sorted[i][1]]);
            i += 1;
        }
        let z_next = if i < sorted.len() { sorted[i][2] } else { reference[2] };
        if z_next > z {
            volume += staircase_area(&prefix, reference[0], reference[1]) * (z_next - z);
        }
    }
    volume
}

/// Indices of the maximal non-dominated subset, stable by input order.
pub fn pareto_front(points: &[ObjectiveVector]) -> Vec<usize> {
    (0..points.len())
        .filter(|&i| {
            !points
                .iter()
                .enumerate()
                .any(|(j, q)| j != i && dominates(q, &points[i]))
        })
        .collect()
}

/// Scale objectives into `[0, 1]` per dimension by the reference point.
pub fn normalize(objective: &ObjectiveVector, nadir: &ReferencePoint) -> ObjectiveVector {
    let o = objective.as_array();
    let scale = |v: f64, r: f64| if r > 0.0 { v / r } else { 0.0 };
    ObjectiveVector {
        error: scale(o[0], nadir.0[0]),
        flops: scale(o[1], nadir.0[1]),
        params: scale(o[2], nadir.0[2]),
    }
}

/// Hypervolume of a front after nadir normalization; lands in `[0, 1]`.
pub fn normalized_hypervolume(front: &[ObjectiveVector], nadir: &ReferencePoint) -> f64 {
    let normalized: Vec<Vec<f64>> =
        front.iter().map(|o| normalize(o, nadir).as_array().to_vec()).collect();
    hypervolume(&normalized, &[1.0, 1.0, 1.0])
}

/// Rebuild the run's reference point from the first record's members
/// (the evaluated first generation).
pub fn nadir_from_records(records: &[GenerationRecord]) -> Result<ReferencePoint, MetricsError> {
    let first = records.first().ok_or(MetricsError::EmptyLog)?;
    let objectives: Vec<ObjectiveVector> = first
        .members
        .iter()
        .map(|m| ObjectiveVector { error: m.error, flops: m.flops_m, params: m.params_m })
        .collect();
    nadir_from_first_generation(&objectives)
}

/// Normalized hypervolume per generation, recomputed from the logged
/// front-0 objectives. This is the same code path the engine uses while
/// running, so recomputed values match logged values exactly.
pub fn normalized_hv_series(
    records: &[GenerationRecord],
    nadir: &ReferencePoint,
) -> Vec<f64> {
    records
        .iter()
        .map(|r| {
            let front: Vec<ObjectiveVector> = r
                .front0_objectives
                .iter()
                .map(|o| ObjectiveVector { error: o[0], flops: o[1], params: o[2] })
                .collect();
            normalized_hypervolume(&front, nadir)
        })
        .collect()
}

/// Per-generation metrics CSV: `generation,hv,normalized_hv,best_error,evals`.
pub fn write_generation_csv<W: Write>(records: &[GenerationRecord], mut out: W) -> std::io::Result<()> {
    writeln!(out, "generation,hv,normalized_hv,best_error,evals")?;
    for r in records {
        writeln!(
            out,
            "{},{},{},{},{}",
            r.generation, r.hv_raw, r.hv, r.best_error, r.evals_used
        )?;
    }
    Ok(())
}

/// Per-individual scatter CSV: `generation,error,flops_m,params_m`.
pub fn write_scatter_csv<W: Write>(records: &[GenerationRecord], mut out: W) -> std::io::Result<()> {
    writeln!(out, "generation,error,flops_m,params_m")?;
    for r in records {
        for m in &r.members {
            writeln!(out, "{},{},{},{}", r.generation, m.error, m.flops_m, m.params_m)?;
        }
    }
    Ok(())
}
