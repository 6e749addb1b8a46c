use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::Context;
use oscnh::cell::{slope_sample, slope_table, SlopeTable};
use oscnh::directions::{equidistribution_discrepancy, omega_hat, LatticeSearch};
use oscnh::domain::{convergence_study, non_flatness_report};
use oscnh::fbar::{eigenvalue_invariance_check, fbar_table, FbarTable, HomogenizedOperator};
use oscnh::grid::GridRef;
use oscnh::multiscale::{composite_barrier_check, projection_family, second_homogenization, slab_slopes};
use oscnh::{classify_direction, nearest_lattice_translate, Direction, SymmetricMatrix2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::cache::{cache_key, Cache, ARTIFACT_VERSION};
use crate::config::{LoadedConfig, Module, RunConfig};
use crate::manifest::{unix_now, Manifest, TaskRecord, TaskStatus};

/// Environment variable naming the output root.
pub const OUTPUT_ROOT_ENV: &str = "OSCNH_OUTPUT_ROOT";
pub const DEFAULT_OUTPUT_ROOT: &str = "oscnh-out";

/// Output root from the environment, falling back to `./oscnh-out`.
pub fn output_root_from_env() -> PathBuf {
    std::env::var_os(OUTPUT_ROOT_ENV).map(PathBuf::from).unwrap_or_else(|| PathBuf::from(DEFAULT_OUTPUT_ROOT))
}

pub fn config_hash(config: &RunConfig) -> String {
    cache_key("config", config)
}

/// Directory for a run's outputs.
pub fn output_dir(config: &RunConfig, root: &Path) -> PathBuf {
    match &config.output_dir {
        Some(d) => root.join(d),
        None => root.join(format!("{}-{}", config.module.name(), &config_hash(config)[..12])),
    }
}

/// Cache key of the slope table a config needs.
pub fn slope_table_key(config: &RunConfig) -> String {
    let n = &config.numerics;
    cache_key("slope_table", &(&config.operator, &config.g, &n.angle_list, &n.eps_list, &n.cell))
}

/// Cache key of the F̄ table a config needs.
pub fn fbar_table_key(config: &RunConfig) -> String {
    let n = &config.numerics;
    cache_key("fbar_table", &(&config.operator, &n.fbar, n.fbar_count))
}

struct Runner<'a> {
    config: &'a RunConfig,
    out: PathBuf,
    cache: Cache,
    manifest: Manifest,
}

impl Runner<'_> {
    fn record(&mut self, id: &str, kind: &str, required: bool, cache_key: Option<String>, started: Instant, outcome: std::result::Result<(TaskStatus, serde_json::Value), String>) {
        let (status, detail, error) = match outcome {
            Ok((s, d)) => (s, d, None),
            Err(e) => (TaskStatus::Failed, serde_json::Value::Null, Some(e)),
        };
        self.manifest.tasks.push(TaskRecord {
            id: id.into(),
            kind: kind.into(),
            status,
            required,
            cache_key,
            wall_time: started.elapsed().as_secs_f64(),
            detail,
            error,
        });
    }

    /// Runs `f` as a task, recording its outcome; `None` on failure.
    fn task<T: Serialize>(&mut self, id: &str, kind: &str, required: bool, f: impl FnOnce() -> anyhow::Result<T>) -> Option<T> {
        self.task_with(id, kind, required, |v| serde_json::to_value(v).unwrap_or(serde_json::Value::Null), f)
    }

    fn task_with<T>(
        &mut self,
        id: &str,
        kind: &str,
        required: bool,
        summary: impl Fn(&T) -> serde_json::Value,
        f: impl FnOnce() -> anyhow::Result<T>,
    ) -> Option<T> {
        let t = Instant::now();
        match f() {
            Ok(v) => {
                let detail = summary(&v);
                self.record(id, kind, required, None, t, Ok((TaskStatus::Ok, detail)));
                Some(v)
            }
            Err(e) => {
                self.record(id, kind, required, None, t, Err(format!("{e:#}")));
                None
            }
        }
    }

    /// Loads `kind` from the cache or builds and stores it.
    fn cached<T: Serialize + serde::de::DeserializeOwned>(
        &mut self,
        id: &str,
        kind: &str,
        key: String,
        summary: impl Fn(&T) -> serde_json::Value,
        build: impl FnOnce() -> anyhow::Result<T>,
    ) -> Option<T> {
        let t = Instant::now();
        let outcome = (|| -> anyhow::Result<(TaskStatus, T)> {
            if let Some(v) = self.cache.load::<T>(kind, &key)? {
                return Ok((TaskStatus::Cached, v));
            }
            let v = build()?;
            self.cache.store(kind, &key, &v)?;
            // Reload so fresh and cached runs emit from identical values.
            let v = self.cache.load::<T>(kind, &key)?.context("cache entry vanished after store")?;
            Ok((TaskStatus::Ok, v))
        })();
        match outcome {
            Ok((status, v)) => {
                let dep = format!("{kind}:{key} ({})", if status == TaskStatus::Cached { "cached" } else { "built" });
                self.manifest.dependencies.push(dep);
                self.record(id, kind, true, Some(key), t, Ok((status, summary(&v))));
                Some(v)
            }
            Err(e) => {
                self.record(id, kind, true, Some(key), t, Err(format!("{e:#}")));
                None
            }
        }
    }

    fn write(&mut self, name: &str, task_id: &str, contents: &[u8]) -> anyhow::Result<()> {
        let path = self.out.join(name);
        std::fs::write(&path, contents).with_context(|| format!("writing {}", path.display()))?;
        self.manifest.outputs.push(format!("{name} <- {task_id}"));
        Ok(())
    }

    fn slope_table(&mut self) -> Option<SlopeTable> {
        let key = slope_table_key(self.config);
        let cfg = self.config;
        let table = self.cached(
            "slope_table",
            "slope_table",
            key,
            |t: &SlopeTable| serde_json::json!({ "angles": t.entries.len(), "warnings": t.warnings.len() }),
            || {
                let g = cfg.neumann_data()?;
                let n = &cfg.numerics;
                Ok(slope_table(&n.angle_list, &cfg.operator, &g, &n.eps_list, &n.cell)?)
            },
        )?;
        self.manifest.warnings.extend(table.warnings.iter().cloned());
        Some(table)
    }

    fn fbar_table(&mut self) -> Option<FbarTable> {
        let key = fbar_table_key(self.config);
        let cfg = self.config;
        self.cached(
            "fbar_table",
            "fbar_table",
            key,
            |t: &FbarTable| serde_json::json!({ "fit": t.fit }),
            || Ok(fbar_table(&cfg.operator, cfg.numerics.fbar_count, &cfg.numerics.fbar)?),
        )
    }

    fn homogenized_operator(&mut self) -> Option<HomogenizedOperator> {
        if self.config.operator.is_y_independent() {
            return Some(HomogenizedOperator::Spec(self.config.operator.clone()));
        }
        let table = self.fbar_table()?;
        self.task("homogenized_operator", "fbar", true, || Ok(table.homogenized_operator(1e-6)?))
    }

    fn directions(&mut self) -> anyhow::Result<()> {
        let d = self.config.directions.clone().context("directions section missing")?;
        let search = LatticeSearch { denominator_bound: d.denominator_bound, ..LatticeSearch::default() };
        let mut lines = String::new();
        for (k, v) in d.nu.iter().enumerate() {
            let id = format!("direction/{k}");
            let result = self.task(&id, "directions", true, || {
                let nu = Direction::new(*v)?;
                let certificate = classify_direction(nu.components, d.denominator_bound)?;
                let translate = nearest_lattice_translate(&nu, [0.0, 0.0], [0.0, 0.0], d.eps, &search).ok();
                let omega = omega_hat(&nu, d.eps, &search).ok();
                let equidistribution = equidistribution_discrepancy(&nu, [0.0, 0.0], d.window, d.samples)?;
                Ok(serde_json::json!({
                    "task_id": id,
                    "nu": nu,
                    "certificate": certificate,
                    "eps": d.eps,
                    "omega_hat": omega,
                    "translate": translate,
                    "equidistribution": equidistribution,
                }))
            });
            if let Some(r) = result {
                writeln!(lines, "{}", serde_json::to_string(&r)?)?;
            }
        }
        self.write("directions.jsonl", "direction/*", lines.as_bytes())
    }

    fn slope(&mut self) -> anyhow::Result<()> {
        if let Some(table) = self.slope_table() {
            let mut csv = String::from("task_id,angle,mu_bar,error_bar,c1,c2\n");
            for e in &table.entries {
                writeln!(csv, "slope_table,{:.17e},{:.17e},{:.17e},{:.17e},{:.17e}", e.angle, e.mu_bar, e.error_bar, e.c1, e.c2)?;
            }
            self.write("slope_table.csv", "slope_table", csv.as_bytes())?;
        }
        Ok(())
    }

    fn sweep(&mut self) -> anyhow::Result<()> {
        let cfg = self.config;
        let g = cfg.neumann_data()?;
        let n = &cfg.numerics;
        let jobs: Vec<(usize, f64, usize, f64)> = n
            .angle_list
            .iter()
            .enumerate()
            .flat_map(|(a, &angle)| n.eps_list.iter().enumerate().map(move |(e, &eps)| (a, angle, e, eps)))
            .collect();
        let results: Vec<_> = jobs
            .par_iter()
            .map(|&(_, angle, _, eps)| {
                let t = Instant::now();
                let r = slope_sample(&Direction::from_angle(angle), [0.0, 0.0], eps, &cfg.operator, &g, &n.cell);
                (r, t)
            })
            .collect();
        let mut csv = String::from("task_id,angle,eps,h,mu_eps,mu_eps_alt,flatness,lateral_sensitivity,iterations\n");
        for (&(a, angle, e, eps), (r, t)) in jobs.iter().zip(results) {
            let id = format!("sweep/a{a}/e{e}");
            match r {
                Ok(s) => {
                    writeln!(
                        csv,
                        "{id},{angle:.17e},{eps:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{}",
                        s.h, s.mu_eps, s.mu_eps_alt, s.flatness, s.lateral_sensitivity, s.stats.iterations
                    )?;
                    let detail = serde_json::json!({ "angle": angle, "eps": eps, "mu_eps": s.mu_eps, "converged": s.stats.converged });
                    self.record(&id, "sweep", true, None, t, Ok((TaskStatus::Ok, detail)));
                }
                Err(err) => self.record(&id, "sweep", true, None, t, Err(err.to_string())),
            }
        }
        self.write("sweep.csv", "sweep/*", csv.as_bytes())
    }

    fn fbar(&mut self) -> anyhow::Result<()> {
        let cfg = self.config;
        if let Some(table) = self.fbar_table() {
            let mut csv = String::from("task_id,theta,value\n");
            for (t, v) in table.thetas.iter().zip(&table.values) {
                writeln!(csv, "fbar_table,{t:.17e},{v:.17e}")?;
            }
            self.write("fbar_table.csv", "fbar_table", csv.as_bytes())?;
        }
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let angles: Vec<f64> = (0..cfg.numerics.rotations).map(|_| rng.random_range(0.0..std::f64::consts::PI)).collect();
        let ms = [SymmetricMatrix2::diag(1.0, -0.5), SymmetricMatrix2::diag(2.0, 0.3), SymmetricMatrix2::new(1.0, 0.4, -1.0)];
        if let Some(rep) = self.task("invariance", "fbar", true, || Ok(eigenvalue_invariance_check(&cfg.operator, &ms, &angles, &cfg.numerics.fbar)?)) {
            if !rep.gate_passed {
                self.manifest.warnings.push(format!("eigenvalue invariance gate failed: deviation {:.3e}", rep.max_deviation));
            }
            let mut csv = String::from("task_id,matrix,angle,deviation\n");
            for (k, a, d) in &rep.entries {
                writeln!(csv, "invariance,{k},{a:.17e},{d:.17e}")?;
            }
            self.write("invariance.csv", "invariance", csv.as_bytes())?;
        }
        Ok(())
    }

    fn multiscale(&mut self) -> anyhow::Result<()> {
        let cfg = self.config;
        let ms = cfg.multiscale.clone().context("multiscale section missing")?;
        let g = cfg.neumann_data()?;
        let cell = &cfg.numerics.cell;
        let Some(book) = self.task("scale_book", "multiscale", true, || Ok(ms.scale_book()?)) else {
            return Ok(());
        };
        let Some(slopes) = self.task("slab_slopes", "multiscale", true, || {
            let family = projection_family(&g, book.delta)?;
            Ok(slab_slopes(&book.nu1, [0.0, 0.0], book.eps, book.n, &family, &cfg.operator, cell)?)
        }) else {
            return Ok(());
        };
        let mut csv = String::from("task_id,k,mu_k,lateral_sensitivity\n");
        for (k, (mu, s)) in slopes.mu_k.iter().zip(&slopes.lateral_sensitivity).enumerate() {
            writeln!(csv, "slab_slopes,{k},{mu:.17e},{s:.17e}")?;
        }
        self.write("slab_slopes.csv", "slab_slopes", csv.as_bytes())?;
        let fbar = self.homogenized_operator();
        let second = self.task("second_homogenization", "multiscale", false, || {
            Ok(second_homogenization(&slopes, &book.nu1, book.eps, book.n, ms.barrier.repeats.max(1), &cfg.operator, fbar.as_ref(), cell)?)
        });
        let guess = ms.mu_bar_guess.unwrap_or_else(|| slopes.mean());
        let barrier = self.task("composite_barrier", "multiscale", true, || {
            Ok(composite_barrier_check(book.eps, &book, &cfg.operator, &g, guess, ms.kind, cell, &ms.barrier)?)
        });
        if let Some(b) = &barrier {
            self.manifest.warnings.extend(b.warnings.iter().cloned());
        }
        let report = serde_json::json!({
            "scalebook": book,
            "slab_slopes": slopes,
            "second_homogenization": second,
            "composite_barrier": barrier,
            "interior_ok": barrier.as_ref().map(|b| b.interior_ok()),
            "dominates": barrier.as_ref().and_then(|b| b.dominates()),
        });
        self.write("multiscale.json", "scale_book+slab_slopes+composite_barrier", serde_json::to_string_pretty(&report)?.as_bytes())
    }

    fn domain(&mut self) -> anyhow::Result<()> {
        let cfg = self.config;
        let spec = cfg.domain.clone().context("domain section missing")?;
        let g = cfg.neumann_data()?;
        let n = &cfg.numerics;
        if let Some(rep) = self.task("non_flatness", "domain", false, || Ok(non_flatness_report(&spec.outer, &[0.05, 0.1, 0.2, 0.4], 64, None)?)) {
            if !rep.accepted() {
                self.manifest.warnings.push(format!("{}: boundary has a flat piece; homogenization may fail there", spec.name));
            }
        }
        let table = self.slope_table();
        let fbar = self.homogenized_operator();
        let study = self.task_with("convergence", "domain", true, |s: &oscnh::domain::ConvergenceStudy| serde_json::to_value(&s.report).unwrap_or_default(), || {
            Ok(convergence_study(&spec, &cfg.operator, &g, &n.eps_list, n.margin, n.cell.points_per_period, fbar.as_ref(), table.as_ref(), &n.cell.solve)?)
        });
        let Some(study) = study else { return Ok(()) };
        if !study.report.strictly_decreasing {
            self.manifest.warnings.push("sup-distance is not strictly decreasing over the eps list".into());
        }
        let mut csv = String::from("task_id,eps,sup_distance\n");
        for e in &study.report.entries {
            writeln!(csv, "convergence,{:.17e},{:.17e}", e.eps, e.sup_distance)?;
        }
        self.write("domain_convergence.csv", "convergence", csv.as_bytes())?;
        for (name, sol) in [("u_eps.csv", &study.finest_eps), ("u_homogenized.csv", &study.finest_homogenized)] {
            let mut buf = Vec::new();
            sol.field.write_csv(GridRef::Domain(&sol.grid), &mut buf)?;
            self.write(name, "convergence", &buf)?;
        }
        self.write("domain_report.json", "convergence", serde_json::to_string_pretty(&study.report)?.as_bytes())
    }
}

/// Executes the selected pipeline, writing outputs and `manifest.json`
/// under the run's output directory.
pub fn run(loaded: &LoadedConfig, root: &Path) -> anyhow::Result<(Manifest, PathBuf)> {
    let config = &loaded.config;
    let out = output_dir(config, root);
    std::fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display()))?;
    let manifest = Manifest {
        module: config.module.name().into(),
        config_hash: config_hash(config),
        artifact_version: ARTIFACT_VERSION.into(),
        config: serde_json::to_value(config)?,
        tasks: Vec::new(),
        warnings: loaded.warnings.clone(),
        dependencies: Vec::new(),
        outputs: Vec::new(),
        started_unix: unix_now(),
        finished_unix: 0.0,
    };
    let mut runner = Runner { config, out: out.clone(), cache: Cache::new(root), manifest };
    let body = |r: &mut Runner<'_>| match config.module {
        Module::Directions => r.directions(),
        Module::Slope => r.slope(),
        Module::Sweep => r.sweep(),
        Module::Multiscale => r.multiscale(),
        Module::Fbar => r.fbar(),
        Module::Domain => r.domain(),
    };
    match config.threads {
        Some(t) => rayon::ThreadPoolBuilder::new().num_threads(t).build()?.install(|| body(&mut runner))?,
        None => body(&mut runner)?,
    }
    runner.manifest.finished_unix = unix_now();
    let path = out.join("manifest.json");
    std::fs::write(&path, serde_json::to_string_pretty(&runner.manifest)?).with_context(|| format!("writing {}", path.display()))?;
    Ok((runner.manifest, out))
}

/// One summary line per manifest found directly under `root`.
pub fn report(root: &Path) -> anyhow::Result<Vec<String>> {
    let mut lines = Vec::new();
    let Ok(dir) = std::fs::read_dir(root) else { return Ok(lines) };
    let mut paths: Vec<PathBuf> = dir.filter_map(|e| e.ok()).map(|e| e.path().join("manifest.json")).filter(|p| p.exists()).collect();
    paths.sort();
    for p in paths {
        let m: Manifest = serde_json::from_str(&std::fs::read_to_string(&p)?).with_context(|| format!("parsing {}", p.display()))?;
        let count = |s: TaskStatus| m.tasks.iter().filter(|t| t.status == s).count();
        lines.push(format!(
            "{}\t{}\t{}\tok={} cached={} failed={} warnings={}",
            p.parent().map(|d| d.display().to_string()).unwrap_or_default(),
            m.module,
            &m.config_hash[..12],
            count(TaskStatus::Ok),
            count(TaskStatus::Cached),
            count(TaskStatus::Failed),
            m.warnings.len()
        ));
    }
    Ok(lines)
}
