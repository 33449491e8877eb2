//! Command execution.

use rayon::prelude::*;
use serde_json::{json, Value};
use sshh::berry::{berry_phase, BERRY_DENSE_CAP};
use sshh::effective::band_compare;
use sshh::ensemble::{BerrySweep, PolarizationSweep, SweepResult};
use sshh::{build_hamiltonian, linalg, run_walk, FockBasis, WalkSetup};

use crate::error::CliError;
use crate::output::{Artifact, Table};
use crate::recipe::{occupancy, Command, Recipe, SweepTarget};

pub fn run(recipe: &Recipe) -> Result<Artifact, CliError> {
    recipe.check()?;
    let tables = match recipe.command {
        Command::Spectrum => spectrum(recipe)?,
        Command::Walk => walk(recipe)?,
        Command::Berry => berry(recipe)?,
        Command::Effcmp => effcmp(recipe)?,
        Command::Sweep => sweep(recipe)?,
    };
    Ok(Artifact {
        recipe: recipe.clone(),
        tables,
    })
}

fn spectrum(recipe: &Recipe) -> Result<Vec<Table>, CliError> {
    let block = recipe.spectrum.as_ref().expect("resolved recipe");
    let spec = &recipe.spec;
    let basis = FockBasis::with_cap(spec, &occupancy(&block.occupancy, spec.flavors), BERRY_DENSE_CAP)?;
    let h = build_hamiltonian(spec, &basis)?.to_dense(BERRY_DENSE_CAP)?;
    let mut energies = Table::new("spectrum", &["index", "energy"]);
    let mut tables = Vec::new();
    if block.eigenvectors {
        let eig = linalg::eigh(&h)?;
        let mut vectors = Table::new("vectors", &["index", "state", "re", "im"]);
        for k in 0..eig.count() {
            energies.push(vec![json!(k), json!(eig.values[k])]);
            for (s, z) in eig.vector(k).iter().enumerate() {
                vectors.push(vec![json!(k), json!(s), json!(z.re), json!(z.im)]);
            }
        }
        tables.push(energies);
        tables.push(vectors);
    } else {
        for (k, e) in linalg::eigvalsh(&h)?.into_iter().enumerate() {
            energies.push(vec![json!(k), json!(e)]);
        }
        tables.push(energies);
    }
    Ok(tables)
}

fn walk(recipe: &Recipe) -> Result<Vec<Table>, CliError> {
    let block = recipe.walk.as_ref().expect("resolved recipe");
    let mut main = Table::new(
        "walk",
        &["delta", "t", "p1", "p1_cumulative", "pn", "pn_cumulative", "nn", "pn_reliable"],
    );
    let mut density = Table::new("density", &["delta", "t", "site", "density", "nion_density"]);
    for &delta in &block.deltas {
        let mut setup = WalkSetup::new(
            recipe.spec.clone().with_dimerization(delta),
            block.injection.clone(),
            block.propagator.clone(),
        );
        setup.cell_origin = block.cell_origin;
        let rec = run_walk(&setup)?;
        let p1c = rec.p1_series()?.cumulative;
        let pnc = rec.pn_series()?.cumulative;
        for (i, &t) in rec.times.iter().enumerate() {
            main.push(vec![
                json!(delta),
                json!(t),
                json!(rec.p1[i]),
                json!(p1c[i]),
                json!(rec.pn[i]),
                json!(pnc[i]),
                json!(rec.nn[i]),
                json!(rec.pn_reliable[i]),
            ]);
            for (x, (d, n)) in rec.density[i].iter().zip(&rec.nion_density[i]).enumerate() {
                density.push(vec![json!(delta), json!(t), json!(x), json!(d), json!(n)]);
            }
        }
    }
    Ok(vec![main, density])
}

fn berry(recipe: &Recipe) -> Result<Vec<Table>, CliError> {
    let block = recipe.berry.as_ref().expect("resolved recipe");
    let base = &recipe.spec;
    let basis = FockBasis::with_cap(base, &occupancy(&block.occupancy, base.flavors), BERRY_DENSE_CAP)?;
    let results: Vec<_> = block
        .deltas
        .par_iter()
        .map(|&d| berry_phase(&base.clone().with_dimerization(d), &basis, &block.grid, &block.selector))
        .collect::<Result<_, _>>()?;
    let mut main = Table::new(
        "berry",
        &[
            "delta",
            "gamma",
            "quantization_error",
            "min_gap",
            "min_gap_theta",
            "trusted",
            "subset_start",
            "subset_end",
            "steps",
        ],
    );
    let mut phases = Table::new("phases", &["delta", "step", "theta", "phase"]);
    let angles = block.grid.angles();
    for (&d, r) in block.deltas.iter().zip(&results) {
        main.push(vec![
            json!(d),
            json!(r.gamma),
            json!(r.quantization_error()),
            json!(r.min_gap),
            json!(r.min_gap_theta),
            json!(r.trusted),
            json!(r.subset.0),
            json!(r.subset.1),
            json!(r.steps),
        ]);
        for (n, p) in r.per_step_phases.iter().enumerate() {
            phases.push(vec![json!(d), json!(n), json!(angles[n]), json!(p)]);
        }
    }
    Ok(vec![main, phases])
}

fn effcmp(recipe: &Recipe) -> Result<Vec<Table>, CliError> {
    let block = recipe.effcmp.as_ref().expect("resolved recipe");
    let points: Vec<(f64, f64)> = block
        .interactions
        .iter()
        .flat_map(|&u| block.deltas.iter().map(move |&d| (u, d)))
        .collect();
    let results: Vec<_> = points
        .par_iter()
        .map(|&(u, d)| band_compare(&recipe.spec.clone().with_interaction(u).with_dimerization(d)))
        .collect::<Result<_, _>>()?;
    let mut summary = Table::new(
        "effcmp",
        &["interaction", "delta", "max_abs_error", "band_gap", "edge_states"],
    );
    let mut bands = Table::new("bands", &["interaction", "delta", "index", "full", "effective", "edge_weight", "edge_state"]);
    for (&(u, d), r) in points.iter().zip(&results) {
        summary.push(vec![json!(u), json!(d), json!(r.max_abs_error), json!(r.band_gap), json!(r.edge_states.len())]);
        for k in 0..r.full.len() {
            bands.push(vec![
                json!(u),
                json!(d),
                json!(k),
                json!(r.full[k]),
                json!(r.effective[k]),
                r.edge_weight.get(k).map_or(Value::Null, |w| json!(w)),
                json!(r.edge_states.iter().any(|e| e.index == k)),
            ]);
        }
    }
    Ok(vec![summary, bands])
}

fn sweep(recipe: &Recipe) -> Result<Vec<Table>, CliError> {
    let block = recipe.sweep.as_ref().expect("resolved recipe");
    let res: SweepResult = match &block.target {
        SweepTarget::Berry {
            occupancy: occ,
            grid,
            selector,
            average,
        } => BerrySweep {
            spec: recipe.spec.clone(),
            occupancy: occupancy(occ, recipe.spec.flavors),
            deltas: block.deltas.clone(),
            amplitudes: block.amplitudes.clone(),
            grid: grid.clone(),
            selector: selector.clone(),
            disorder: block.disorder.clone(),
            average: *average,
        }
        .run()?,
        SweepTarget::Polarization {
            injection,
            propagator,
            cell_origin,
        } => {
            let mut walk = WalkSetup::new(recipe.spec.clone(), injection.clone(), propagator.clone());
            walk.cell_origin = *cell_origin;
            PolarizationSweep {
                walk,
                deltas: block.deltas.clone(),
                amplitudes: block.amplitudes.clone(),
                disorder: block.disorder.clone(),
            }
            .run()?
        }
    };
    let mut main = Table::new(
        "sweep",
        &[
            "delta",
            "amplitude",
            "statistic",
            "mean",
            "std_error",
            "concentration",
            "count",
            "failures",
            "valid",
        ],
    );
    let mut failures = Table::new("failures", &["delta", "amplitude", "statistic", "realization", "reason"]);
    for p in &res.points {
        let stat = serde_json::to_value(p.statistic).expect("statistics serialize");
        main.push(vec![
            json!(p.delta),
            json!(p.amplitude),
            stat.clone(),
            json!(p.mean),
            json!(p.std_error),
            p.concentration.map_or(Value::Null, |c| json!(c)),
            json!(p.count),
            json!(p.failures.len()),
            json!(p.valid),
        ]);
        for (r, reason) in &p.failures {
            failures.push(vec![json!(p.delta), json!(p.amplitude), stat.clone(), json!(r), json!(reason)]);
        }
    }
    Ok(vec![main, failures])
}
