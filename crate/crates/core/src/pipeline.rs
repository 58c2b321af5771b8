//! End-to-end runs producing an [`AnalysisReport`]: measure statistics,
//! lattice, corona, operator checks and the capacity bound.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::beta::{beta2, jones_integral};
use crate::corona::{build_corona, packing_audit, CoronaParams, CoronaTree};
use crate::error::{Error, Result};
use crate::lattice::{build_lattice, Lattice, LatticeParams};
use crate::measure::{annulus_constant, Ball, WeightedPointMeasure};
use crate::operators::{eps_grid, lattice_bumps, CZKernel};
use crate::verify::{
    capacity_lower_bound, cotlar_check, main_lemma_check, pointwise_domination_check, sample_indices,
    suppressed_bound_check, suppression_lemma_check, t1_ball_check, tree_geometry_audit, AnalysisReport,
    CheckRecord, InputDescriptor,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum KernelChoice {
    /// Riesz kernel of the measure's dimension `n`.
    Riesz,
    Cauchy,
}

impl KernelChoice {
    pub fn build(self, mu: &WeightedPointMeasure) -> Result<CZKernel> {
        match self {
            KernelChoice::Riesz => CZKernel::riesz(mu.n(), mu.dim()),
            KernelChoice::Cauchy if mu.dim() == 2 => Ok(CZKernel::cauchy()),
            KernelChoice::Cauchy => Err(Error::InvalidParameter(format!(
                "the Cauchy kernel needs planar data, got dimension {}",
                mu.dim()
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub source: String,
    pub lattice: LatticeParams,
    pub corona: CoronaParams,
    pub scales_per_octave: u32,
    /// Truncation radii per octave of the `ε` grid.
    pub eps_per_octave: u32,
    pub kernel: KernelChoice,
    pub seed: u64,
    /// Sample size of the pointwise checks.
    pub samples: usize,
    /// Number of random balls of the local T1 check.
    pub balls: usize,
    /// Include every cell in the lattice section.
    pub dump_cells: bool,
}

impl PipelineConfig {
    pub fn new(source: &str, n: usize) -> Self {
        PipelineConfig {
            source: source.to_string(),
            lattice: LatticeParams::relaxed(n),
            corona: CoronaParams::default(),
            scales_per_octave: 4,
            eps_per_octave: 2,
            kernel: KernelChoice::Riesz,
            seed: 0,
            samples: 200,
            balls: 20,
            dump_cells: false,
        }
    }

    fn to_map(&self) -> BTreeMap<String, Value> {
        match serde_json::to_value(self) {
            Ok(Value::Object(m)) => m.into_iter().collect(),
            _ => BTreeMap::new(),
        }
    }
}

fn report(command: &str, mu: &WeightedPointMeasure, cfg: &PipelineConfig) -> AnalysisReport {
    let mut r = AnalysisReport::new(command, InputDescriptor::of(&cfg.source, mu));
    r.config = cfg.to_map();
    r
}

fn section<T: Serialize>(value: &T) -> Result<Value> {
    Ok(serde_json::to_value(value)?)
}

/// Random `(point, radius)` pairs with radius log-uniform in `[r_min, diam]`.
fn sample_balls(mu: &WeightedPointMeasure, count: usize, seed: u64) -> Vec<(usize, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let lo = mu.r_min();
    let hi = mu.diameter().max(lo);
    (0..count)
        .map(|_| {
            let i = rng.random_range(0..mu.len());
            (i, lo * (hi / lo).powf(rng.random::<f64>()))
        })
        .collect()
}

/// Growth constant, annulus tail bound, `β² <= 4θ` and Jones integrals at sampled points.
pub fn analyze(mu: &WeightedPointMeasure, cfg: &PipelineConfig) -> Result<AnalysisReport> {
    if mu.is_empty() {
        return Err(Error::EmptyMeasure);
    }
    let mut rep = report("analyze", mu, cfg);
    let c0 = mu.growth_constant_exact();
    let balls = sample_balls(mu, cfg.samples, cfg.seed);
    let mut tail_max: f64 = 0.0;
    let mut beta_ratio: f64 = 0.0;
    for &(i, r) in &balls {
        let x = mu.point(i);
        tail_max = tail_max.max(r * mu.annulus_tail(x, r));
        let b = beta2(mu, &Ball::new(x.to_vec(), r)?)?;
        let theta = mu.density_theta(x, r);
        if theta > 0.0 {
            beta_ratio = beta_ratio.max(b.value * b.value / theta);
        }
    }
    let n = mu.n();
    rep.records.push(
        CheckRecord::new("annulus_growth", tail_max, annulus_constant(n) * c0, balls.len())
            .with_param("growth_constant", c0)
            .with_param("seed", cfg.seed),
    );
    let mut beta_rec = CheckRecord::new("beta_theta", beta_ratio, 4.0, balls.len()).with_param("seed", cfg.seed);
    beta_rec.ratio = beta_ratio / 4.0;
    rep.records.push(beta_rec);

    let centers = sample_indices(mu.len(), cfg.samples, cfg.seed ^ 0x9e37);
    let diam = mu.diameter();
    let mut jones = Vec::with_capacity(centers.len());
    for &i in &centers {
        jones.push(if diam > mu.r_min() {
            jones_integral(mu, mu.point(i), mu.r_min(), diam, cfg.scales_per_octave)?
        } else {
            0.0
        });
    }
    let mean = jones.iter().sum::<f64>() / jones.len().max(1) as f64;
    let max = jones.iter().copied().fold(0.0, f64::max);
    rep.sections.insert(
        "measure".into(),
        json!({
            "growth_constant": c0,
            "jones_mean": mean,
            "jones_max": max,
            "jones_centers": centers,
        }),
    );
    Ok(rep)
}

fn lattice_section(lat: &Lattice, mu: &WeightedPointMeasure, dump: bool) -> Result<Value> {
    let inv = lat.check_invariants(mu);
    let per_level: Vec<usize> = lat.levels.iter().map(Vec::len).collect();
    let doubling = lat.cells.iter().filter(|c| c.doubling).count();
    let mut v = json!({
        "params": section(&lat.params)?,
        "base_scale": lat.base_scale,
        "depth": lat.depth(),
        "cells": lat.len(),
        "cells_per_level": per_level,
        "doubling_cells": doubling,
        "invariants": section(&inv)?,
        "nonconforming_fraction": inv.nonconforming_fraction(),
    });
    if dump {
        v["cell_dump"] = section(&lat.dump())?;
    }
    Ok(v)
}

pub fn lattice(mu: &WeightedPointMeasure, cfg: &PipelineConfig) -> Result<(AnalysisReport, Lattice)> {
    let lat = build_lattice(mu, cfg.lattice)?;
    let mut rep = report("lattice", mu, cfg);
    rep.sections.insert("lattice".into(), lattice_section(&lat, mu, cfg.dump_cells)?);
    Ok((rep, lat))
}

fn corona_records(
    mu: &WeightedPointMeasure,
    lat: &Lattice,
    corona: &CoronaTree,
    cfg: &PipelineConfig,
    rep: &mut AnalysisReport,
) -> Result<()> {
    let audit = packing_audit(corona, lat, mu, cfg.scales_per_octave)?;
    let mut rec = CheckRecord::new("packing", audit.lhs, audit.rhs, corona.trees.len())
        .with_param("scales_per_octave", cfg.scales_per_octave);
    rec.ratio = audit.ratio;
    rep.records.push(rec);

    let mut lip = 0;
    let mut lower = f64::INFINITY;
    let mut upper: f64 = 0.0;
    let mut upper_parent: f64 = 0.0;
    let mut outside = 0;
    let mut stop_phi: f64 = 0.0;
    for pos in 0..corona.trees.len() {
        let a = tree_geometry_audit(mu, lat, corona, pos, 50, 4, cfg.seed.wrapping_add(pos as u64))?;
        lip += a.lipschitz_violations;
        lower = lower.min(a.reg_lower_min);
        upper = upper.max(a.reg_upper_max);
        upper_parent = upper_parent.max(a.reg_upper_max_parent);
        outside += a.reg_outside_stop;
        stop_phi = stop_phi.max(a.stop_phi_max);
    }
    rep.sections.insert(
        "tree_geometry".into(),
        json!({
            "lipschitz_violations": lip,
            "reg_lower_min": if lower.is_finite() { json!(lower) } else { Value::Null },
            "reg_upper_max": upper,
            "reg_upper_max_parent": upper_parent,
            "reg_outside_stop": outside,
            "stop_phi_max": stop_phi,
        }),
    );
    Ok(())
}

pub fn corona(mu: &WeightedPointMeasure, cfg: &PipelineConfig) -> Result<(AnalysisReport, Lattice, CoronaTree)> {
    let lat = build_lattice(mu, cfg.lattice)?;
    let corona = build_corona(&lat, mu, cfg.corona)?;
    let mut rep = report("corona", mu, cfg);
    rep.sections.insert("lattice".into(), lattice_section(&lat, mu, cfg.dump_cells)?);
    rep.sections.insert("corona".into(), section(&corona.summary(&lat, mu))?);
    corona_records(mu, &lat, &corona, cfg, &mut rep)?;
    Ok((rep, lat, corona))
}

/// Trees used by the per-tree checks: the root tree and the non-root tree
/// with the most points.
fn checked_trees(lat: &Lattice, corona: &CoronaTree) -> Vec<usize> {
    let mut out = vec![0];
    let best = (1..corona.trees.len()).max_by(|&a, &b| {
        let pa = lat.cells[corona.trees[a].top].points.len();
        let pb = lat.cells[corona.trees[b].top].points.len();
        pa.cmp(&pb).then(b.cmp(&a))
    });
    out.extend(best);
    out
}

/// Every operator check plus the packing audit.
pub fn verify(mu: &WeightedPointMeasure, cfg: &PipelineConfig) -> Result<AnalysisReport> {
    let kernel = cfg.kernel.build(mu)?;
    let (mut rep, lat, corona) = corona(mu, cfg)?;
    rep.command = "verify".into();
    let grid = eps_grid(mu, cfg.eps_per_octave);
    rep.records.push(main_lemma_check(mu, &kernel, &grid, cfg.scales_per_octave)?);

    let balls: Vec<Ball> = sample_balls(mu, cfg.balls, cfg.seed ^ 0xb411)
        .into_iter()
        .map(|(i, r)| Ball::new(mu.point(i).to_vec(), r))
        .collect::<Result<_>>()?;
    if !balls.is_empty() {
        rep.records.push(t1_ball_check(mu, &kernel, &balls, cfg.eps_per_octave, cfg.scales_per_octave)?);
    }

    let bump = lattice_bumps(&lat);
    for pos in checked_trees(&lat, &corona) {
        let top = &lat.cells[corona.trees[pos].top];
        let inside: Vec<usize> = {
            let pick = sample_indices(top.points.len(), cfg.samples, cfg.seed.wrapping_add(pos as u64));
            pick.iter().map(|&j| top.points[j]).collect()
        };
        let mut c = cotlar_check(mu, &kernel, &corona, &lat, pos, None, &inside)?;
        c.name = format!("cotlar_tree{pos}");
        rep.records.push(c);
        let mut d = pointwise_domination_check(mu, &kernel, &corona, &lat, &bump, pos, &inside)?;
        d.name = format!("pointwise_domination_tree{pos}");
        rep.records.push(d);
    }

    let geom = crate::corona::TreeGeometry::new(&corona, &lat, 0)?;
    let phi: Vec<f64> = mu.points().map(|p| geom.phi(p)).collect();
    let [a, b] = suppression_lemma_check(mu, &kernel, &phi, cfg.samples, cfg.seed)?;
    rep.records.push(a);
    rep.records.push(b);
    rep.records.push(suppressed_bound_check(mu, &kernel, &phi, 10 * cfg.samples, cfg.seed)?);
    Ok(rep)
}

pub fn capacity(mu: &WeightedPointMeasure, cfg: &PipelineConfig) -> Result<AnalysisReport> {
    let cap = capacity_lower_bound(mu, cfg.scales_per_octave)?;
    let mut rep = report("capacity", mu, cfg);
    let mut rec = CheckRecord::new("capacity", cap.bound, mu.total_mass(), mu.len())
        .with_param("scales_per_octave", cfg.scales_per_octave);
    rec.ratio = cap.t_star;
    if cap.sub_resolution {
        rec.warnings
            .push("support is a single location; the bound only reflects the resolution r_min".into());
    }
    rep.records.push(rec);
    rep.sections.insert("capacity".into(), section(&cap)?);
    Ok(rep)
}
