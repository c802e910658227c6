//! The four harness entry points: verify, hunt, stats, construct.
//! Every sweep collects into memory, sorts by (theorem, q, d, seed, ...),
//! and emits once, so the parallelism degree never changes the output.

use anyhow::{bail, Context, Result};
use num::ToPrimitive;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

use qradial_core::constructions::{
    affine_subspace_set, collinear_set, concurrent_lines_set, product_set, random_set,
    subfield_subplane,
};
use qradial_core::exact::DEFAULT_SQRT_BITS;
use qradial_core::radial::exceptional_set;
use qradial_core::theorems::{
    check_four_m_squared, check_just_cs, check_large_e_general, check_large_esc,
    check_large_t_general, check_large_tsc, check_t_on_a_line, check_unique_bad_point,
    conjecture_scan_instance, recheck_witness, rich_histogram, rich_sum_statistic,
    verify_et_inequalities, verify_line_sum_identity, verify_variance_bound,
};
use qradial_core::{BoundReport, ConjectureWitness, PointSet, Space, Threshold, Verdict};

use crate::config::SweepConfig;
use crate::manifest::{cell_seed, RunManifest};

/// One generated instance of a sweep cell.
struct Instance {
    space: Space,
    e_set: PointSet,
    family: String,
    seed: u64,
}

fn family_is_deterministic(family: &str) -> bool {
    family != "random"
}

/// Builds the instance list for the configured grid. Deterministic
/// families contribute one instance per cell regardless of `trials`.
fn instances(config: &SweepConfig) -> Result<Vec<Instance>> {
    let mut out = Vec::new();
    for space in config.spaces()? {
        let (p, e, d) = (space.field().p(), space.field().e(), space.d());
        let trials = if family_is_deterministic(&config.family) {
            1
        } else {
            config.trials
        };
        for &size in &config.size {
            for trial in 0..trials {
                let seed = cell_seed(config.seed, p, e, d, &config.family, trial);
                let (space, e_set) = match config.family.as_str() {
                    "random" => {
                        let set = random_set(&space, size, seed, None)?;
                        (clone_space(&space), set)
                    }
                    "subspace" => {
                        let k = *config.k.first().unwrap_or(&1) as usize;
                        let set = affine_subspace_set(&space, k.min(d), 0)?;
                        (clone_space(&space), set)
                    }
                    "collinear" => {
                        let set = collinear_set(&space, size.min(space.q()))?;
                        (clone_space(&space), set)
                    }
                    "concurrent" => {
                        let m = size.clamp(1, space.qbinom());
                        let set = concurrent_lines_set(&space, m, 0, true)?;
                        (clone_space(&space), set)
                    }
                    "subplane" => subfield_subplane(p)?,
                    "product" => {
                        let side = size.min(space.q());
                        let elems: Vec<u64> = (0..side).collect();
                        let set = product_set(&space, &elems, &elems)?;
                        (clone_space(&space), set)
                    }
                    other => bail!("unknown family {other:?}"),
                };
                out.push(Instance {
                    space,
                    e_set,
                    family: config.family.clone(),
                    seed,
                });
            }
            if config.family == "subspace"
                || config.family == "subplane"
                || config.family == "product"
            {
                break; // size grid does not vary these families
            }
        }
    }
    Ok(out)
}

fn clone_space(space: &Space) -> Space {
    Space::new(space.field_arc(), space.d()).expect("space parameters already validated")
}

fn report_for_identity(inst: &Instance) -> BoundReport {
    let start = std::time::Instant::now();
    let r = verify_line_sum_identity(&inst.space, &inst.e_set);
    let mut rep = blank_report("identity", inst);
    rep.hypotheses_met = true;
    rep.measured = r.lhs.min(u64::MAX as u128) as u64;
    rep.bound = r.rhs.to_string();
    rep.holds = if r.ok { Verdict::Yes } else { Verdict::No };
    rep.runtime_ms = start.elapsed().as_millis() as u64;
    rep
}

fn report_for_variance(inst: &Instance) -> BoundReport {
    let start = std::time::Instant::now();
    let r = verify_variance_bound(&inst.space, &inst.e_set);
    let mut rep = blank_report("variance", inst);
    rep.hypotheses_met = true;
    rep.measured = r.lhs.ceil().to_integer().to_u64().unwrap_or(u64::MAX);
    rep.bound = r.rhs.to_integer().to_string();
    rep.holds = if r.ok { Verdict::Yes } else { Verdict::No };
    rep.runtime_ms = start.elapsed().as_millis() as u64;
    rep
}

fn report_for_et(inst: &Instance, m: u64) -> BoundReport {
    let start = std::time::Instant::now();
    let r = verify_et_inequalities(&inst.space, &inst.e_set, m, DEFAULT_SQRT_BITS);
    let mut rep = blank_report("et", inst);
    rep.m = Some(m);
    rep.hypotheses_met = true;
    rep.measured = r.sum_et.min(u64::MAX as u128) as u64;
    rep.bound = (inst.e_set.len() as u128 * r.size_t as u128).to_string();
    rep.holds = if r.ok { Verdict::Yes } else { Verdict::No };
    rep.runtime_ms = start.elapsed().as_millis() as u64;
    rep
}

fn blank_report(theorem: &str, inst: &Instance) -> BoundReport {
    // check_unique_bad_point builds a fully-populated report for this
    // space; reuse its shape for the synthesized identity records.
    let mut rep = check_unique_bad_point(&inst.space, &inst.e_set);
    rep.theorem = theorem.to_string();
    rep.hypotheses_met = false;
    rep.measured = 0;
    rep.bound = String::new();
    rep.holds = Verdict::NotApplicable;
    rep.m = None;
    rep.c = None;
    rep.runtime_ms = 0;
    rep
}

fn first_disjoint_line(space: &Space, e_set: &PointSet) -> Option<qradial_core::LineKey> {
    space
        .enumerate_lines()
        .ok()?
        .find(|&line| space.line_points(line).iter().all(|&p| !e_set.contains(p)))
}

fn reports_for_instance(inst: &Instance, config: &SweepConfig) -> Result<Vec<BoundReport>> {
    let mut out = Vec::new();
    let space = &inst.space;
    let e_set = &inst.e_set;
    for theorem in &config.theorems {
        match theorem.as_str() {
            "identity" => out.push(report_for_identity(inst)),
            "variance" => out.push(report_for_variance(inst)),
            "et" => out.extend(config.m.iter().map(|&m| report_for_et(inst, m))),
            "1.2" => out.extend(config.m.iter().map(|&m| check_large_esc(space, e_set, m))),
            "4.2" => out.extend(
                config
                    .m
                    .iter()
                    .map(|&m| check_large_e_general(space, e_set, m)),
            ),
            "1.4" => out.push(check_large_tsc(space, e_set)),
            "4.4" => out.extend(
                config
                    .m
                    .iter()
                    .map(|&m| check_large_t_general(space, e_set, m, DEFAULT_SQRT_BITS)),
            ),
            "1.5" => {
                for &c in &config.parsed_c()? {
                    match check_just_cs(space, e_set, c) {
                        Ok(rep) => out.push(rep),
                        Err(err) => {
                            let mut rep = blank_report("1.5", inst);
                            rep.c = Some(c.to_string());
                            rep.bound = err.to_string();
                            out.push(rep);
                        }
                    }
                }
            }
            "1.7" => out.push(check_unique_bad_point(space, e_set)),
            "1.8" => out.extend(
                config
                    .m
                    .iter()
                    .map(|&m| check_four_m_squared(space, e_set, m)),
            ),
            "3.2" => {
                if let Some(line) = first_disjoint_line(space, e_set) {
                    out.extend(
                        config
                            .m
                            .iter()
                            .map(|&m| check_t_on_a_line(space, e_set, m, line)),
                    );
                }
            }
            other => bail!("unknown theorem selector {other:?}"),
        }
    }
    for rep in &mut out {
        rep.family = inst.family.clone();
        rep.seed = inst.seed;
    }
    Ok(out)
}

fn sort_reports(reports: &mut [BoundReport]) {
    reports.sort_by(|a, b| {
        (
            &a.theorem, a.q, a.d, a.seed, &a.family, a.size_e, a.m, a.c.clone(),
        )
            .cmp(&(&b.theorem, b.q, b.d, b.seed, &b.family, b.size_e, b.m, b.c.clone()))
    });
}

#[derive(Serialize)]
struct VerifyReport {
    manifest: RunManifest,
    violations: u64,
    reports: Vec<BoundReport>,
}

/// Runs the selected checkers over the grid; returns the violation count
/// (any hypotheses-met `no`, including identity mismatches).
pub fn run_verify(config: &SweepConfig) -> Result<u64> {
    config.validate()?;
    let manifest = RunManifest::new(config);
    let instances = instances(config)?;
    let mut reports: Vec<BoundReport> = instances
        .par_iter()
        .map(|inst| reports_for_instance(inst, config))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .flatten()
        .collect();
    sort_reports(&mut reports);
    let violations = reports.iter().filter(|r| r.violated()).count() as u64;

    let text = match config.format.as_str() {
        "json" => {
            let body = VerifyReport {
                manifest,
                violations,
                reports,
            };
            serde_json::to_string_pretty(&body)? + "\n"
        }
        _ => {
            let mut text = format!(
                "# digest={} version={}\n\
                 theorem,q,d,e,family,sizeE,M,C,hypotheses_met,measured,bound,holds,seed,runtime_ms\n",
                manifest.digest, manifest.version
            );
            for r in &reports {
                text.push_str(&format!(
                    "{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
                    r.theorem,
                    r.q,
                    r.d,
                    r.e,
                    r.family,
                    r.size_e,
                    r.m.map(|m| m.to_string()).unwrap_or_default(),
                    r.c.clone().unwrap_or_default().replace(',', ";"),
                    r.hypotheses_met,
                    r.measured,
                    r.bound.replace(',', ";"),
                    verdict_str(r.holds),
                    r.seed,
                    r.runtime_ms
                ));
            }
            text
        }
    };
    emit(config.out.as_deref(), &text)?;
    Ok(violations)
}

fn verdict_str(v: Verdict) -> &'static str {
    match v {
        Verdict::Yes => "yes",
        Verdict::No => "no",
        Verdict::NotApplicable => "not-applicable",
    }
}

// ---------------------------------------------------------------------------
// Hunt
// ---------------------------------------------------------------------------

#[derive(Serialize, Deserialize)]
struct HuntCheckpoint {
    digest: String,
    completed: Vec<String>,
    witnesses: Vec<ConjectureWitness>,
}

#[derive(Serialize)]
struct HuntReport {
    manifest: RunManifest,
    cells: u64,
    instances: u64,
    witnesses: Vec<ConjectureWitness>,
}

fn checkpoint_path(out: &Path) -> PathBuf {
    let mut name = out.file_name().unwrap_or_default().to_os_string();
    name.push(".checkpoint");
    out.with_file_name(name)
}

/// Streams the conjecture scan over the grid, checkpointing per cell when
/// writing to a file. Returns the number of confirmed witnesses.
pub fn run_hunt(config: &SweepConfig) -> Result<u64> {
    config.validate()?;
    let manifest = RunManifest::new(config);

    let mut completed: Vec<String> = Vec::new();
    let mut witnesses: Vec<ConjectureWitness> = Vec::new();
    let ckpt_path = config.out.as_deref().map(checkpoint_path);
    if let Some(path) = ckpt_path.as_deref() {
        if path.exists() {
            let prior: HuntCheckpoint =
                serde_json::from_str(&std::fs::read_to_string(path)?)
                    .context("parsing hunt checkpoint")?;
            if prior.digest == manifest.digest {
                completed = prior.completed;
                witnesses = prior.witnesses;
            }
        }
    }

    let mut cells = 0u64;
    let mut scanned = 0u64;
    for space in config.spaces()? {
        let (p, e, d) = (space.field().p(), space.field().e(), space.d());
        let q = space.q();
        for &k in &config.k {
            if k < 1 || k as usize > d - 1 {
                continue;
            }
            cells += 1;
            let cell_id = format!("p={p},e={e},d={d},k={k}");
            if completed.contains(&cell_id) {
                continue;
            }
            let lo = q.pow(k - 1) + 1;
            let hi = q.pow(k);
            let family = format!("hunt-k{k}");
            let cell_witnesses: Vec<ConjectureWitness> = (0..config.trials)
                .into_par_iter()
                .filter_map(|trial| {
                    let seed = cell_seed(config.seed, p, e, d, &family, trial);
                    let mut rng = ChaCha8Rng::seed_from_u64(seed);
                    let n = rng.gen_range(lo..=hi);
                    let e_set = random_set(&space, n, rng.gen(), None).ok()?;
                    conjecture_scan_instance(&space, &e_set, k).ok().flatten()
                })
                .collect();
            scanned += config.trials;
            // The structured families are cheap; scan them in every cell.
            let subspace = affine_subspace_set(&space, k as usize, 0)?;
            scanned += 1;
            let mut extra: Vec<ConjectureWitness> = Vec::new();
            if let Some(w) = conjecture_scan_instance(&space, &subspace, k)? {
                extra.push(w);
            }
            for w in cell_witnesses.into_iter().chain(extra) {
                // Round-trip contract: a stored witness must reproduce.
                if recheck_witness(&w) {
                    witnesses.push(w);
                }
            }
            completed.push(cell_id);
            if let Some(path) = ckpt_path.as_deref() {
                let ckpt = HuntCheckpoint {
                    digest: manifest.digest.clone(),
                    completed: completed.clone(),
                    witnesses: witnesses.clone(),
                };
                std::fs::write(path, serde_json::to_string(&ckpt)?)?;
            }
        }
    }

    let found = witnesses.len() as u64;
    let body = HuntReport {
        manifest,
        cells,
        instances: scanned,
        witnesses,
    };
    emit(
        config.out.as_deref(),
        &(serde_json::to_string_pretty(&body)? + "\n"),
    )?;
    if let Some(path) = ckpt_path.as_deref() {
        let _ = std::fs::remove_file(path);
    }
    Ok(found)
}

/// Reloads a witness file and re-runs every stored witness through the
/// scanner; returns the number that fail to reproduce.
pub fn run_recheck(path: &Path) -> Result<u64> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading witness file {}", path.display()))?;
    let value: serde_json::Value = serde_json::from_str(&text)?;
    let witnesses: Vec<ConjectureWitness> =
        serde_json::from_value(value.get("witnesses").cloned().unwrap_or_default())?;
    let mut stale = 0u64;
    for w in &witnesses {
        let ok = recheck_witness(w);
        println!(
            "witness q={} d={} k={} |E|={} measured={}: {}",
            w.field.field,
            w.d,
            w.k,
            w.set.len(),
            w.measured,
            if ok { "reproduced" } else { "STALE" }
        );
        if !ok {
            stale += 1;
        }
    }
    println!("{} witness(es), {} stale", witnesses.len(), stale);
    Ok(stale)
}

// ---------------------------------------------------------------------------
// Stats
// ---------------------------------------------------------------------------

/// Incidence statistics for the plane regime: one CSV row per instance.
pub fn run_stats(config: &SweepConfig) -> Result<()> {
    config.validate()?;
    for &e in &config.e {
        if e != 1 {
            bail!("stats requires prime fields: cell e={e} rejected");
        }
    }
    for &d in &config.d {
        if d != 2 {
            bail!("stats requires d = 2: cell d={d} rejected");
        }
    }
    let manifest = RunManifest::new(config);
    let instances = instances(config)?;
    let rows: Vec<String> = instances
        .par_iter()
        .map(|inst| {
            let mut rows = Vec::new();
            let size_e = inst.e_set.len();
            for &m in &config.m {
                let t = exceptional_set(&inst.space, &inst.e_set, Threshold::less_than_int(m));
                let hist = rich_histogram(&inst.space, &inst.e_set);
                let hist_str: Vec<String> =
                    hist.iter().map(|(k, n)| format!("{k}:{n}")).collect();
                let rich_sum = rich_sum_statistic(&inst.space, &inst.e_set, 2, size_e as u32);
                let m_scaled = (m as f64).powf(11.0 / 4.0) / size_e as f64;
                let m_sq = (m * m) as f64 / size_e as f64;
                rows.push(format!(
                    "{},{},{},{},{},{},{:.6},{:.6},{},{}",
                    inst.space.q(),
                    inst.family,
                    inst.seed,
                    size_e,
                    m,
                    t.len(),
                    m_scaled,
                    m_sq,
                    hist_str.join(";"),
                    rich_sum
                ));
            }
            rows
        })
        .flatten()
        .collect();
    let mut sorted = rows;
    sorted.sort();
    let mut text = format!(
        "# digest={} version={}\n\
         q,family,seed,sizeE,M,sizeT,M_11_4_over_E,M2_over_E,rich_histogram,rich_sum\n",
        manifest.digest, manifest.version
    );
    for row in &sorted {
        text.push_str(row);
        text.push('\n');
    }
    emit(config.out.as_deref(), &text)?;
    Ok(())
}

// ---------------------------------------------------------------------------
// Construct
// ---------------------------------------------------------------------------

#[derive(Serialize)]
struct ConstructOutput {
    field: String,
    modulus: Vec<u64>,
    d: usize,
    family: String,
    seed: u64,
    points: Vec<u64>,
}

/// Emits one named family as a point-set file: JSON carries the packed
/// indices with field metadata; csv emits one coordinate row per point.
pub fn run_construct(config: &SweepConfig) -> Result<()> {
    config.validate()?;
    let mut single = config.clone();
    single.p.truncate(1);
    single.e.truncate(1);
    single.d.truncate(1);
    single.size.truncate(1);
    single.trials = 1;
    let mut instances = instances(&single)?;
    let Some(inst) = instances.pop() else {
        bail!("empty construction grid");
    };
    let text = match config.format.as_str() {
        "json" => {
            let desc = inst.space.field().descriptor();
            let body = ConstructOutput {
                field: desc.field,
                modulus: desc.modulus,
                d: inst.space.d(),
                family: inst.family.clone(),
                seed: inst.seed,
                points: inst.e_set.to_sorted_vec(),
            };
            serde_json::to_string_pretty(&body)? + "\n"
        }
        _ => {
            let mut text = String::new();
            for p in inst.e_set.iter() {
                let coords: Vec<String> = inst
                    .space
                    .unpack(p)
                    .iter()
                    .map(|c| c.to_string())
                    .collect();
                text.push_str(&coords.join(","));
                text.push('\n');
            }
            text
        }
    };
    emit(config.out.as_deref(), &text)?;
    Ok(())
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(path) => std::fs::write(path, text)
            .with_context(|| format!("writing {}", path.display()))?,
        None => print!("{text}"),
    }
    Ok(())
}
