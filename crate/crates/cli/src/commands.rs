use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use invertkit::data::{synth, Sampling, SignalTable};
use invertkit::gp::{multi_start_evolve, GpConfig};
use invertkit::psi::{invert_decomposed, InversionProblem, PsiError};
use invertkit::{svg, BoxClass, ExprVector, Paving};
use serde_json::{json, Value};

use crate::config::Resolved;

/// Regression ran out of generations without reaching `target_cost`.
pub const EXIT_BUDGET: u8 = 2;
/// Inversion stopped at `max_boxes`; the paving written is partial.
pub const EXIT_BOX_LIMIT: u8 = 3;

/// Files are written only once a command has fully succeeded, so a failing
/// run leaves nothing half-written behind.
#[derive(Default)]
struct Staged {
    files: Vec<(PathBuf, Vec<u8>)>,
}

impl Staged {
    fn add(&mut self, path: PathBuf, bytes: impl Into<Vec<u8>>) {
        self.files.push((path, bytes.into()));
    }

    fn commit(self) -> Result<()> {
        let mut temps: Vec<(PathBuf, &Path)> = Vec::new();
        let result = (|| -> Result<()> {
            for (path, bytes) in &self.files {
                if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
                    std::fs::create_dir_all(dir)
                        .with_context(|| format!("creating {}", dir.display()))?;
                }
                let mut name = path.file_name().unwrap_or_default().to_os_string();
                name.push(".partial");
                let temp = path.with_file_name(name);
                std::fs::write(&temp, bytes).with_context(|| format!("writing {}", temp.display()))?;
                temps.push((temp, path));
            }
            Ok(())
        })();
        if let Err(e) = result {
            for (temp, _) in &temps {
                let _ = std::fs::remove_file(temp);
            }
            return Err(e);
        }
        for (temp, path) in &temps {
            std::fs::rename(temp, path).with_context(|| format!("writing {}", path.display()))?;
            eprintln!("wrote {}", path.display());
        }
        Ok(())
    }
}

fn out_dir(cfg: &Resolved) -> Result<PathBuf> {
    cfg.path("out.dir")
}

fn sampling(cfg: &Resolved) -> Result<Sampling> {
    match cfg.string("synth.sampling")?.as_str() {
        "grid" => Ok(Sampling::Grid),
        "random" => Ok(Sampling::Random),
        other => bail!("`synth.sampling` must be `grid` or `random`, got `{other}`"),
    }
}

fn synth_table(cfg: &Resolved) -> Result<SignalTable> {
    let region = cfg.interval_box("synth.R")?;
    let model = ExprVector::parse(&cfg.string("synth.model")?, region.dim())
        .context("`synth.model`")?;
    let table = synth(
        &model,
        &region,
        cfg.usize("synth.points")?,
        cfg.f64("synth.noise")?,
        cfg.u64("synth.seed")?,
        sampling(cfg)?,
    )?;
    Ok(table)
}

pub fn cmd_synth(cfg: &Resolved) -> Result<u8> {
    let table = synth_table(cfg)?;
    let mut staged = Staged::default();
    staged.add(out_dir(cfg)?.join("data.csv"), table.to_csv_string());
    staged.commit()?;
    Ok(0)
}

fn load_table(cfg: &Resolved) -> Result<SignalTable> {
    let path = cfg.path("data.path")?;
    let table = SignalTable::load_csv(&path, cfg.opt_usize("data.inputs")?)
        .with_context(|| format!("loading {}", path.display()))?;
    match cfg.usize("data.decimate")? {
        1 => Ok(table),
        k => Ok(table.decimate(k)?),
    }
}

struct Regression {
    model: ExprVector,
    report: Value,
    reached_target: bool,
}

/// One independent multi-start run per output column.
fn regress(table: &SignalTable, gp: &GpConfig) -> Result<Regression> {
    let mut components = Vec::new();
    let mut reports = Vec::new();
    let mut reached_target = true;
    for (j, name) in table.columns()[table.inputs()..].iter().enumerate() {
        let data = table.dataset(j)?;
        eprintln!(
            "regressing `{name}` on {} samples ({} restarts, seed {})",
            data.len(),
            gp.restarts,
            gp.seed
        );
        let outcome = multi_start_evolve(&data, gp)?;
        let best = outcome.best;
        eprintln!(
            "  `{name}`: cost {} after {} generations{}",
            best.cost,
            outcome.generations_used,
            if outcome.reached_target { "" } else { " (target not reached)" }
        );
        reached_target &= outcome.reached_target;
        reports.push(json!({
            "output": name,
            "cost": best.cost,
            "generations_used": outcome.generations_used,
            "seed": gp.seed,
            "restart_id": outcome.restart_id,
            "node_count": best.expr.node_count(),
            "depth": best.expr.depth(),
            "reached_target": outcome.reached_target,
            "restarts": outcome.restarts,
        }));
        components.push(best.expr);
    }
    let model = ExprVector::new(table.inputs(), components)?;
    let report = match reports.len() {
        1 => reports.pop().expect("one report"),
        _ => json!({ "outputs": reports }),
    };
    Ok(Regression { model, report, reached_target })
}

pub fn cmd_regress(cfg: &Resolved) -> Result<u8> {
    let table = load_table(cfg)?;
    let gp = cfg.gp_config()?;
    let reg = regress(&table, &gp)?;
    let dir = out_dir(cfg)?;
    let mut staged = Staged::default();
    staged.add(dir.join("model.sexpr"), format!("{}\n", reg.model.to_sexpr()));
    staged.add(dir.join("report.json"), pretty(&reg.report));
    staged.commit()?;
    Ok(if reg.reached_target { 0 } else { EXIT_BUDGET })
}

fn pretty(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("JSON values serialise");
    s.push('\n');
    s
}

fn problem_model_text(cfg: &Resolved) -> Result<String> {
    match (cfg.opt_string("problem.model")?, cfg.opt_path("problem.model_file")?) {
        (Some(text), None) => Ok(text),
        (None, Some(path)) => std::fs::read_to_string(&path)
            .with_context(|| format!("reading model {}", path.display())),
        (Some(_), Some(_)) => bail!("give either `problem.model` or `problem.model_file`, not both"),
        (None, None) => bail!("`problem.model` or `problem.model_file` is required"),
    }
}

struct Inversion {
    paving: Paving,
    complete: bool,
}

fn invert(cfg: &Resolved, model: ExprVector) -> Result<Inversion> {
    let r = cfg.interval_box("problem.R")?;
    let p = cfg.interval_box("problem.P")?;
    let psi = cfg.psi_config(r.dim())?;
    let problem = InversionProblem::new(model, r, p)?;
    eprintln!(
        "inverting over {} with resolution {} on {} worker(s)",
        problem.adjustments(),
        psi.resolution,
        psi.workers
    );
    match invert_decomposed(&problem, &psi) {
        Ok(paving) => Ok(Inversion { paving, complete: true }),
        Err(PsiError::BoxLimit { limit, paving }) => {
            eprintln!("warning: stopped at psi.max_boxes = {limit}; the paving is partial");
            Ok(Inversion { paving: *paving, complete: false })
        }
        Err(e) => Err(e.into()),
    }
}

fn paving_summary(inv: &Inversion) -> Value {
    let p = &inv.paving;
    let count = |c| p.boxes(c).len();
    json!({
        "resolution": p.resolution,
        "complete": inv.complete,
        "boxes": {
            "accepted": count(BoxClass::Accepted),
            "rejected": count(BoxClass::Rejected),
            "boundary": count(BoxClass::Boundary),
        },
        "volume": {
            "accepted": p.volume(BoxClass::Accepted),
            "rejected": p.volume(BoxClass::Rejected),
            "boundary": p.volume(BoxClass::Boundary),
        },
    })
}

fn stage_paving(staged: &mut Staged, dir: &Path, inv: &Inversion) -> Result<()> {
    let p = &inv.paving;
    staged.add(dir.join("paving.json"), p.to_json());
    staged.add(dir.join("paving.csv"), p.to_csv());
    if p.adjustments.dim() <= 2 {
        staged.add(dir.join("paving.svg"), svg::render(p)?);
    }
    let s = paving_summary(inv);
    eprintln!("paving: {}", s["boxes"]);
    Ok(())
}

pub fn cmd_invert(cfg: &Resolved) -> Result<u8> {
    let arity = cfg.interval_box("problem.R")?.dim();
    let model = ExprVector::parse(problem_model_text(cfg)?.trim(), arity).context("problem model")?;
    let inv = invert(cfg, model)?;
    let mut staged = Staged::default();
    stage_paving(&mut staged, &out_dir(cfg)?, &inv)?;
    staged.commit()?;
    Ok(if inv.complete { 0 } else { EXIT_BOX_LIMIT })
}

/// Regression on a dataset (loaded, or synthesised when `data.path` is
/// unset), then inversion of the learned model.
pub fn cmd_pipeline(cfg: &Resolved) -> Result<u8> {
    let dir = out_dir(cfg)?;
    let mut staged = Staged::default();
    let table = if cfg.opt_string("data.path")?.is_some() {
        load_table(cfg).context("data stage")?
    } else {
        let table = synth_table(cfg).context("synth stage")?;
        staged.add(dir.join("data.csv"), table.to_csv_string());
        match cfg.usize("data.decimate")? {
            1 => table,
            k => table.decimate(k).context("data stage")?,
        }
    };
    let gp = cfg.gp_config().context("regress stage")?;
    let reg = regress(&table, &gp).context("regress stage")?;
    let inv = invert(cfg, reg.model.clone()).context("invert stage")?;

    staged.add(dir.join("model.sexpr"), format!("{}\n", reg.model.to_sexpr()));
    stage_paving(&mut staged, &dir, &inv).context("invert stage")?;
    let report = json!({ "regress": reg.report, "invert": paving_summary(&inv) });
    staged.add(dir.join("report.json"), pretty(&report));
    staged.commit()?;
    Ok(if !inv.complete {
        EXIT_BOX_LIMIT
    } else if !reg.reached_target {
        EXIT_BUDGET
    } else {
        0
    })
}

pub fn cmd_plot(cfg: &Resolved) -> Result<u8> {
    let input = cfg.path("plot.paving")?;
    let paving = Paving::load_json(&input).with_context(|| format!("loading {}", input.display()))?;
    let out = cfg.opt_path("plot.out")?.unwrap_or_else(|| input.with_extension("svg"));
    let mut staged = Staged::default();
    staged.add(out, svg::render(&paving)?);
    staged.commit()?;
    Ok(0)
}
