//! Dispatch from an experiment kind to the library pipelines.

use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use summlab::atoms::{atom_scaling_scan, default_t_grid, make_atom, TileGrid};
use summlab::decomp::{
    bruteforce_distance, cz_profile, whitney_decompose, CapSystem, CzOptions, GridMask, KernelTile, RingSystem,
};
use summlab::distance::{make_builtin, DistanceKind, HomogeneousDistance};
use summlab::fit::fit_line;
use summlab::riesz::{critical_lambda, subordination_residual, OperatorFamily, RieszSpec};
use summlab::sharpness::{sharpness_scan, ScanOptions};
use summlab::spectral::{synthesize, FieldMode, SpectralField, TorusGrid, DEFAULT_NODE_BUDGET};
use summlab::strong::{strong_mean_profile, StrongMeanOptions};
use summlab::Complex64;

use crate::config::Config;
use crate::output::{cache_field, load_field, with_hash_column, write_atomic};
use crate::CliError;

pub const KINDS: &[&str] = &[
    "riesz-eval",
    "strong-mean",
    "sharpness-scan",
    "kernel-scan",
    "atom-scan",
    "decomp-check",
    "whitney",
    "subordination-check",
];

/// What a run wrote.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub files: Vec<PathBuf>,
    /// Diagnostics recorded in the manifest, in order.
    pub diagnostics: Vec<(String, String)>,
}

struct Sink {
    hash: String,
    csv: Vec<(String, String)>,
    diag: Vec<(String, String)>,
}

impl Sink {
    fn csv(&mut self, name: &str, body: String) {
        self.csv.push((name.to_string(), with_hash_column(&body, &self.hash)));
    }

    fn note(&mut self, key: &str, value: impl ToString) {
        self.diag.push((key.to_string(), value.to_string()));
    }
}

/// Runs one experiment on a pool of `threads` workers and writes its outputs
/// into `out`.
pub fn run(cfg: &Config, out: &Path, threads: usize) -> Result<Outcome, CliError> {
    if !KINDS.contains(&cfg.kind.as_str()) {
        return Err(CliError::Validation(format!(
            "unknown experiment kind '{}', expected one of {}",
            cfg.kind,
            KINDS.join(", ")
        )));
    }
    if threads == 0 {
        return Err(CliError::Validation("threads must be at least 1".into()));
    }
    let start = Instant::now();
    let mut sink = Sink {
        hash: cfg.hash(),
        csv: Vec::new(),
        diag: Vec::new(),
    };
    in_pool(threads, || dispatch(cfg, out, &mut sink))??;
    let wall = start.elapsed().as_secs_f64();

    let mut files = Vec::new();
    for (name, body) in &sink.csv {
        let path = out.join(name);
        write_atomic(&path, body.as_bytes())?;
        files.push(path);
    }
    let mut manifest = format!(
        "kind={}\nseed={}\nconfig_hash={}\ncode_version={}\nthreads={threads}\nwall_time_s={wall:.3}\n",
        cfg.kind,
        cfg.seed,
        sink.hash,
        env!("CARGO_PKG_VERSION")
    );
    for (k, v) in cfg.entries() {
        manifest.push_str(&format!("config.{k}={v}\n"));
    }
    for (k, v) in &sink.diag {
        manifest.push_str(&format!("{k}={v}\n"));
    }
    for (name, _) in &sink.csv {
        manifest.push_str(&format!("output={name}\n"));
    }
    let path = out.join("manifest.txt");
    write_atomic(&path, manifest.as_bytes())?;
    files.push(path);
    Ok(Outcome {
        files,
        diagnostics: sink.diag,
    })
}

#[cfg(feature = "parallel")]
fn in_pool<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> Result<T, CliError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| CliError::Io(e.to_string()))?;
    Ok(pool.install(f))
}

#[cfg(not(feature = "parallel"))]
fn in_pool<T: Send>(_threads: usize, f: impl FnOnce() -> T + Send) -> Result<T, CliError> {
    Ok(f())
}

fn dispatch(cfg: &Config, out: &Path, sink: &mut Sink) -> Result<(), CliError> {
    match cfg.kind.as_str() {
        "riesz-eval" => riesz_eval(cfg, out, sink),
        "strong-mean" => strong_mean(cfg, sink),
        "sharpness-scan" => sharpness(cfg, sink),
        "kernel-scan" => kernel_scan(cfg, sink),
        "atom-scan" => atom_scan(cfg, sink),
        "decomp-check" => decomp_check(cfg, sink),
        "whitney" => whitney(cfg, sink),
        "subordination-check" => subordination(cfg, sink),
        _ => unreachable!("kind validated in run"),
    }
}

fn distance(cfg: &Config, d: usize) -> Result<HomogeneousDistance, CliError> {
    let kind = DistanceKind::parse(cfg.str_or("distance", "euclidean"))?;
    Ok(make_builtin(kind, d)?)
}

fn lambda(cfg: &Config, default: f64) -> Result<f64, CliError> {
    let v = cfg.f64_in("lambda", default, -1.0, 64.0)?;
    if v <= -1.0 {
        return Err(CliError::Validation("lambda must exceed -1".into()));
    }
    Ok(v)
}

fn grid(cfg: &Config, d: usize, default_n: usize, period: f64) -> Result<TorusGrid, CliError> {
    let n = cfg.usize_in("n", default_n, 2, 1 << 16)?;
    let budget = cfg.usize_in("max_nodes", DEFAULT_NODE_BUDGET, 1, usize::MAX)?;
    Ok(TorusGrid::with_period(d, n, period, budget)?)
}

/// `field = random` (uniform coefficients damped by `exp(-|l|^2 / decay)`, no
/// damping when `decay = 0`) or `field = mode:l_1,...,l_d` for one character.
fn make_field(cfg: &Config, mode: FieldMode, d: usize, l: usize, decay: f64) -> Result<SpectralField, CliError> {
    let spec = cfg.str_or("field", "random");
    let decay = cfg.f64_in("decay", decay, 0.0, 1e12)?;
    let mut c = SpectralField::zeros(mode, vec![l; d]);
    if let Some(rest) = spec.strip_prefix("mode:") {
        let m: Vec<i64> = rest
            .split(',')
            .map(|s| s.trim().parse::<i64>())
            .collect::<Result<_, _>>()
            .map_err(|_| CliError::Validation(format!("field: cannot parse '{spec}'")))?;
        if m.len() != d {
            return Err(CliError::Validation(format!("field mode needs {d} indices")));
        }
        let i = c
            .index_of(&m)
            .ok_or_else(|| CliError::Validation(format!("mode {m:?} outside the band |l_i| <= {l}")))?;
        c.coeffs[i] = Complex64::new(1.0, 0.0);
        return Ok(c);
    }
    if spec != "random" {
        return Err(CliError::Validation(format!("field: unknown spec '{spec}'")));
    }
    let mut rng = ChaCha20Rng::seed_from_u64(cfg.seed);
    for i in 0..c.len() {
        let r2: i64 = c.lattice_point(i).iter().map(|v| v * v).sum();
        let damp = if decay > 0.0 { (-(r2 as f64) / decay).exp() } else { 1.0 };
        c.coeffs[i] = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)) * damp;
    }
    Ok(c)
}

fn family(cfg: &Config) -> Result<OperatorFamily, CliError> {
    Ok(OperatorFamily::parse(cfg.str_or("family", "torus"))?)
}

fn header(d: usize, tail: &str) -> String {
    let mut s = String::from("x_index");
    for a in 0..d {
        s.push_str(&format!(",x_{}", a + 1));
    }
    s.push(',');
    s.push_str(tail);
    s.push('\n');
    s
}

fn riesz_eval(cfg: &Config, out: &Path, sink: &mut Sink) -> Result<(), CliError> {
    let d = cfg.usize_in("d", 1, 1, 3)?;
    let l = cfg.usize_in("l", 8, 1, 4096)?;
    let lam = lambda(cfg, 1.0)?;
    let t = cfg.f64_in("t", 2.0, f64::MIN_POSITIVE, 1e9)?;
    let fam = family(cfg)?;
    let period = cfg.f64_in("period", 1.0, 1e-6, 1e6)?;
    let mode = if fam == OperatorFamily::RdRiesz {
        FieldMode::Rd { period }
    } else {
        FieldMode::Torus
    };
    let default_n = (2 * l + 2).next_power_of_two();
    let g = grid(cfg, d, default_n, if fam == OperatorFamily::RdRiesz { period } else { 1.0 })?;
    let spec = RieszSpec::new(lam, distance(cfg, d)?)?;

    let key = sink.hash.clone();
    let c = match load_field(out, &key)? {
        Some(c) if c.half == vec![l; d] && c.mode == mode => {
            sink.note("field_source", "cache");
            c
        }
        _ => {
            let c = make_field(cfg, mode, d, l, 0.0)?;
            cache_field(out, &key, &c)?;
            sink.note("field_source", "generated");
            c
        }
    };
    let v = synthesize(&fam.apply(&c, t, &spec)?, &g)?;
    let mut s = header(d, "re,im");
    for (i, z) in v.values.iter().enumerate() {
        s.push_str(&i.to_string());
        for x in g.coords(i) {
            s.push_str(&format!(",{x:e}"));
        }
        s.push_str(&format!(",{:e},{:e}\n", z.re, z.im));
    }
    sink.csv("riesz_eval.csv", s);
    Ok(())
}

fn strong_mean(cfg: &Config, sink: &mut Sink) -> Result<(), CliError> {
    let d = cfg.usize_in("d", 2, 1, 3)?;
    let l = cfg.usize_in("l", 7, 1, 256)?;
    let lam = lambda(cfg, critical_lambda(d, 1.0))?;
    let q = cfg.f64_in("q", 2.0, 1.0, 64.0)?;
    let ladder = cfg.ladder("dyadic:1:9")?;
    let fam = family(cfg)?;
    let period = cfg.f64_in("period", 1.0, 1e-6, 1e6)?;
    let mode = if fam == OperatorFamily::RdRiesz {
        FieldMode::Rd { period }
    } else {
        FieldMode::Torus
    };
    let g = grid(cfg, d, 16, if fam == OperatorFamily::RdRiesz { period } else { 1.0 })?;
    let spec = RieszSpec::new(lam, distance(cfg, d)?)?.with_exponents(None, Some(q));
    let c = make_field(cfg, mode, d, l, 2.0)?;
    let pts: Vec<Vec<f64>> = (0..g.len()).map(|i| g.coords(i)).collect();
    let opts = StrongMeanOptions {
        q,
        ..Default::default()
    };
    let prof = strong_mean_profile(&c, fam, &spec, &pts, &ladder, &opts)?;
    let decreasing = prof.values.iter().filter(|r| r.windows(2).all(|w| w[1] < w[0])).count();
    sink.note("decreasing_points", format!("{decreasing}/{}", pts.len()));
    sink.note("max_quadrature_cells", prof.cells.last().copied().unwrap_or(0));
    sink.csv("strong_mean.csv", prof.to_csv());
    Ok(())
}

fn sharpness(cfg: &Config, sink: &mut Sink) -> Result<(), CliError> {
    let d = cfg.usize_in("d", 2, 2, 2)?;
    let p = cfg.f64_in("p", 1.0, 1.0, 2.0)?;
    let q = cfg.f64_in("q", 2.0, 1.0, 64.0)?;
    // the equality case of the necessary condition by default
    let pp = if p == 1.0 { 0.0 } else { 1.0 - 1.0 / p };
    let lam = lambda(cfg, critical_lambda(d, p) + 0.5 * (pp - 1.0 / q))?;
    let ladder = cfg.ladder("dyadic:4:9")?;
    if ladder[0] < 4.0 {
        return Err(CliError::Validation("plate scales need T >= 4".into()));
    }
    let eps = cfg.f64_in("eps", 0.125, 1e-3, 0.5)?;
    let n1 = cfg.usize_in("x_nodes", 8, 1, 512)?;
    let t_nodes = cfg.usize_in("t_nodes", 65, 64, 4096)?;
    let opts = ScanOptions {
        eps,
        x_nodes: (n1, 2 * n1),
        t_nodes,
    };
    let r = sharpness_scan(d, p, q, lam, &ladder, &opts)?;
    sink.note("lambda", lam);
    sink.note("fitted_slope", r.fit.slope);
    sink.note("predicted_slope", r.predicted);
    sink.note("fit_residual", r.fit.residual);
    sink.csv("sharpness.csv", r.to_csv());
    Ok(())
}

fn kernel_scan(cfg: &Config, sink: &mut Sink) -> Result<(), CliError> {
    let j_min = cfg.usize_in("j_min", 4, 2, 14)? as u32;
    let j_max = cfg.usize_in("j_max", 10, j_min as usize + 1, 14)? as u32;
    let lam = lambda(cfg, 0.5)?;
    let nu = cfg.usize_in("nu", 0, 0, usize::MAX)?;
    let rho = distance(cfg, 2)?;
    let mut s = String::from("j,kernel_mass,log2_max_abs_kernel,along_abs,across_abs,anisotropy\n");
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for j in j_min..=j_max {
        let rings = RingSystem::new(lam, j_max.max(12))?;
        let tile = KernelTile::new(rings, CapSystem::new(j, &rho)?, nu, rho.clone())?;
        // |K(x)| <= int |phi_j chi_nu| = K(0) for the nonnegative multiplier
        let mass = tile.eval(&[0.0, 0.0])?.norm();
        let e = tile.normal().to_vec();
        let r = 2f64.powi(j as i32);
        let along = tile.eval(&[r * e[0], r * e[1]])?.norm();
        let across = tile.eval(&[-r * e[1], r * e[0]])?.norm();
        s.push_str(&format!(
            "{j},{mass:e},{:e},{along:e},{across:e},{:e}\n",
            mass.log2(),
            along / across
        ));
        xs.push(j as f64);
        ys.push(mass.log2());
    }
    let fit = fit_line(&xs, &ys);
    sink.note("fitted_slope", fit.slope);
    sink.note("predicted_slope", -1.5);
    sink.note("fit_residual", fit.residual);
    sink.csv("kernel.csv", s);
    Ok(())
}

fn atom_scan(cfg: &Config, sink: &mut Sink) -> Result<(), CliError> {
    let p = cfg.f64_in("p", 0.8, 0.5, 1.0)?;
    let m = cfg.usize_in("m", 2, 0, 8)?;
    let j_min = cfg.usize_in("j_min", 4, 2, 10)? as u32;
    let j_max = cfg.usize_in("j_max", 9, j_min as usize + 1, 10)? as u32;
    let nt = cfg.usize_in("t_nodes", 129, 2, 4097)?;
    let lam = lambda(cfg, critical_lambda(2, p))?;
    let rho = distance(cfg, 2)?;
    let atom = make_atom(p, m, 2, cfg.seed)?;
    let js: Vec<u32> = (j_min..=j_max).collect();
    let tg = default_t_grid(nt);
    let scan = atom_scaling_scan(&atom, &js, &tg, &TileGrid::default(), |j| {
        KernelTile::new(RingSystem::new(lam, 12)?, CapSystem::new(j, &rho)?, 0, rho.clone())
    })?;
    sink.note("t_window", "[2^-4, 2^4]");
    sink.note("fitted_slope", scan.fit.slope);
    sink.note("predicted_slope", scan.predicted);
    sink.note("fit_residual", scan.fit.residual);
    sink.csv("atom_scan.csv", scan.to_csv());
    Ok(())
}

fn decomp_check(cfg: &Config, sink: &mut Sink) -> Result<(), CliError> {
    let j_min = cfg.usize_in("j_min", 2, 1, 14)? as u32;
    let j_max = cfg.usize_in("j_max", 12, j_min as usize, 14)? as u32;
    let lam = lambda(cfg, 0.5)?;
    let rings = RingSystem::new(lam, j_max)?;
    let recon = rings.reconstruction_error(20_000);
    sink.note("ring_reconstruction_error", format!("{recon:e}"));

    let mut caps_csv = String::from("d,j,caps,count_ratio,separation_constant\n");
    let mut worst_count = (f64::INFINITY, 0.0f64);
    let mut worst_sep = f64::INFINITY;
    for d in [2usize, 3] {
        let rho = make_builtin(DistanceKind::Euclidean, d)?;
        for j in j_min..=j_max {
            let caps = CapSystem::new(j, &rho)?;
            let (cr, sep) = (caps.count_ratio(), caps.separation_constant());
            worst_count = (worst_count.0.min(cr), worst_count.1.max(cr));
            worst_sep = worst_sep.min(sep);
            caps_csv.push_str(&format!("{d},{j},{},{cr:e},{sep:e}\n", caps.len()));
        }
    }
    sink.csv("caps.csv", caps_csv);

    let n = cfg.usize_in("n", 64, 8, 512)?;
    let k_min = cfg.usize_in("k_min", 0, 0, 16)? as i32;
    let k_max = cfg.usize_in("k_max", 4, k_min as usize, 16)? as i32;
    let l = cfg.usize_in("l", n / 2 - 1, 1, n / 2 - 1)?;
    let p = cfg.f64_in("p", 1.0, 1.0, 1.999)?;
    let alpha = cfg.f64_in("alpha", 1.0, 1e-12, 1e12)?;
    let rho = distance(cfg, 2)?;
    let g = grid(cfg, 2, 64, 1.0)?;
    let c = make_field(cfg, FieldMode::Torus, 2, l, 200.0)?;
    let prof = cz_profile(&c, &rho, p, alpha, &g, &CzOptions::new(k_min, k_max))?;
    let mut cz_csv = String::from("mu,class_size,whitney_cubes,bad_cubes,split_cubes,full_box\n");
    for lv in &prof.levels {
        cz_csv.push_str(&format!(
            "{},{},{},{},{},{}\n",
            lv.mu,
            lv.class_size,
            lv.cubes.len(),
            lv.bad.iter().filter(|&&b| b).count(),
            lv.split,
            lv.full_box as u8
        ));
    }
    sink.csv("cz_levels.csv", cz_csv);
    sink.note("cz_u_l1", format!("{:e}", prof.u_l1));
    sink.note("cz_s_lp_p", format!("{:e}", prof.s_lp_p));
    sink.note("cz_ratio", format!("{:e}", prof.ratio()));
    sink.note("classified_cubes", format!("{}/{}", prof.classified, prof.dyadic_cubes));

    if recon > 1e-8 {
        return Err(CliError::Tolerance(format!("ring reconstruction error {recon:e} > 1e-8")));
    }
    if worst_count.0 < 0.25 || worst_count.1 > 4.0 || worst_sep < 0.5 {
        return Err(CliError::Tolerance(format!(
            "cap counts in [{}, {}], separation {worst_sep}",
            worst_count.0, worst_count.1
        )));
    }
    Ok(())
}

/// Union of random balls inside the unit box.
pub fn random_mask(d: usize, n: usize, rng: &mut ChaCha20Rng) -> GridMask {
    let balls: Vec<(Vec<f64>, f64)> = (0..4)
        .map(|_| ((0..d).map(|_| rng.gen::<f64>()).collect(), rng.gen_range(0.08..0.35)))
        .collect();
    GridMask::from_fn(d, n, |c| {
        balls.iter().any(|(x, r)| {
            c.iter()
                .zip(x)
                .map(|(&ci, xi)| ((ci as f64 + 0.5) / n as f64 - xi).powi(2))
                .sum::<f64>()
                < r * r
        })
    })
}

fn whitney(cfg: &Config, sink: &mut Sink) -> Result<(), CliError> {
    let d = cfg.usize_in("d", 2, 1, 3)?;
    let n = cfg.usize_in("n", if d == 3 { 16 } else { 64 }, 2, 1024)?;
    if !n.is_power_of_two() {
        return Err(CliError::Validation("n must be a power of two".into()));
    }
    let masks = cfg.usize_in("masks", 10, 1, 1000)?;
    let max_cubes = cfg.usize_in("max_cubes", 1 << 20, 1, usize::MAX)?;
    let mut rng = ChaCha20Rng::seed_from_u64(cfg.seed);
    let mut s = String::from("mask,cube");
    for a in 0..d {
        s.push_str(&format!(",lo_{}_half_cells", a + 1));
    }
    s.push_str(",side_half_cells,dist_half_cells\n");
    let mut total = 0;
    for k in 0..masks {
        let mask = random_mask(d, n, &mut rng);
        if mask.count() == 0 || mask.count() == mask.cells.len() {
            continue;
        }
        let cubes = whitney_decompose(&mask)?;
        total += cubes.len();
        if total > max_cubes {
            return Err(CliError::Budget(format!("more than {max_cubes} Whitney cubes")));
        }
        for (i, w) in cubes.iter().enumerate() {
            let bd = bruteforce_distance(&mask, w);
            if bd != w.dist || !(w.side <= bd && bd <= 4 * w.side) {
                return Err(CliError::Tolerance(format!(
                    "whitney contract: mask {k} cube {i} side {} distance {bd}",
                    w.side
                )));
            }
            s.push_str(&format!("{k},{i}"));
            for v in &w.lo {
                s.push_str(&format!(",{v}"));
            }
            s.push_str(&format!(",{},{}\n", w.side, w.dist));
        }
    }
    sink.note("whitney_cubes", total);
    sink.csv("whitney.csv", s);
    Ok(())
}

fn subordination(cfg: &Config, sink: &mut Sink) -> Result<(), CliError> {
    let d = cfg.usize_in("d", 2, 1, 3)?;
    let lam = lambda(cfg, 1.0)?;
    let big_n = cfg.usize_in("subord_n", 4, 1, 64)?;
    let m = cfg.usize_in("subord_m", 6, 0, 14)?;
    let samples = cfg.usize_in("samples", 50, 1, 100_000)?;
    let spec = RieszSpec::new(lam, distance(cfg, d)?)?;
    let mut rng = ChaCha20Rng::seed_from_u64(cfg.seed);
    let xis: Vec<Vec<f64>> = (0..samples)
        .map(|_| (0..d).map(|_| rng.gen_range(-1.2..1.2)).collect())
        .collect();
    let mut s = header(d, "residual").replacen("x_index", "sample", 1).replace(",x_", ",xi_");
    let mut worst = 0.0f64;
    for (i, xi) in xis.iter().enumerate() {
        let r = subordination_residual(&spec, big_n, m, std::slice::from_ref(xi))?;
        worst = worst.max(r);
        s.push_str(&i.to_string());
        for v in xi {
            s.push_str(&format!(",{v:e}"));
        }
        s.push_str(&format!(",{r:e}\n"));
    }
    sink.note("max_residual", format!("{worst:e}"));
    sink.csv("subordination.csv", s);
    if worst > 1e-6 {
        return Err(CliError::Tolerance(format!("subordination residual {worst:e} > 1e-6")));
    }
    Ok(())
}
