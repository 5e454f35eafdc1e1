//! Acceptance criteria 1-9. Runs without the libtest harness so that each
//! criterion prints exactly one `pass` / `FAIL` line; exits nonzero if any
//! criterion fails.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};
use std::process::{Command, ExitCode};
use std::sync::Arc;
use std::time::Instant;

use monoport::netlist::{self, Netlist};
use monoport_core::diagnostics::{
    check_monotone, check_resolvent, estimate_cocoercivity, estimate_coercivity, estimate_lipschitz, RandomSampler,
};
use monoport_core::elements::{capacitor_admittance, lift_pointwise, Capacitor, ScalarLaw, ShockleyDiode};
use monoport_core::network::{DriveKind, DriveProblem, OnePort, Orientation};
use monoport_core::operators::{add, constants_affine, invert, shift, AffineOperator, RelationRef};
use monoport_core::signal::{make_derivative, make_integral, sample_drive, DriveSpec};
use monoport_core::solvers::{forward_step, solve_problem, Algorithm, SolverConfig};
use monoport_core::{Error, Vector};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const LAMBDAS: [f64; 3] = [0.1, 1.0, 10.0];

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn envelope() -> OnePort {
    OnePort::series(vec![
        OnePort::diode(ShockleyDiode::default()),
        OnePort::parallel(vec![OnePort::resistor(1.0), OnePort::capacitor(1.0)]).unwrap(),
    ])
    .unwrap()
}

fn g_rc(n: usize) -> RelationRef {
    let c: RelationRef = Arc::new(capacitor_admittance(&Capacitor::new(1.0).unwrap(), n, 1.0).unwrap());
    add(c, Arc::new(AffineOperator::scaled_identity(n, 1.0))).unwrap()
}

fn c1_envelope_current_forward_step() -> Outcome {
    let n = 500;
    let drive = sample_drive(&DriveSpec::sine(1.0, 1.0).with_bias(1.0), n, 1.0).unwrap();
    let prob = DriveProblem::new(envelope(), drive.clone(), DriveKind::Current).unwrap();
    let cfg = SolverConfig::default()
        .with_algorithm(Algorithm::ForwardStep)
        .with_tol(1e-8)
        .with_max_iter(10_000);
    let start = Instant::now();
    let r = match solve_problem(&prob, &cfg) {
        Ok(r) => r,
        Err(e) => return outcome(false, format!("solve failed: {e}")),
    };
    let secs = start.elapsed().as_secs_f64();
    let residual = r.report.final_residual();
    let converged = r.report.converged && residual <= 1e-8;
    let v_rc = r.audit.branches.iter().find(|b| b.path == "/1").map(|b| b.voltage.mean());
    let mean_ok = v_rc.is_some_and(|m| (m - drive.samples().mean()).abs() <= 0.01);
    let kvl_ok = r.audit.kvl <= 1e-6;
    outcome(
        converged && secs <= 10.0 && mean_ok && kvl_ok,
        format!(
            "forward step: converged={} residual={residual:.3e} after {} iterations (need <= 1e-8 in 10000), \
             {secs:.1}s; mean v_RC={:.6} (need 1 +/- 1%), kvl={:.2e}",
            r.report.converged,
            r.report.iterations,
            v_rc.unwrap_or(f64::NAN),
            r.audit.kvl
        ),
    )
}

fn cyclic_runs(on: &[bool]) -> usize {
    let n = on.len();
    (0..n).filter(|&k| on[k] && !on[(k + n - 1) % n]).count()
}

/// The inclusion is checked through the branch audit: the diode's share of
/// the port voltage is projected onto its graph and the KVL mismatch and
/// device distance are measured there. Evaluating `R_diode(i)` directly is
/// meaningless in deep reverse bias, where `i + Is` is below one ulp of `Is`.
/// Max-abs residuals ≤ 1e-6 bound the 2-norm by 1e-6·√N.
fn c2_envelope_voltage_dr() -> Outcome {
    let n = 500;
    let drive = sample_drive(&DriveSpec::sine(1.0, 1.0), n, 1.0).unwrap();
    let prob = DriveProblem::new(envelope(), drive, DriveKind::Voltage).unwrap();
    let mut sols: Vec<Vector> = Vec::new();
    let mut notes = Vec::new();
    let mut ok = true;
    for lambda in LAMBDAS {
        let cfg = SolverConfig::default()
            .with_algorithm(Algorithm::DouglasRachford)
            .with_lambda(lambda)
            .with_tol(1e-10)
            .with_max_iter(100_000);
        match solve_problem(&prob, &cfg) {
            Ok(r) => {
                ok &= r.report.converged;
                let worst = r.audit.worst();
                let two_norm = worst * (n as f64).sqrt();
                ok &= two_norm <= 1e-6 * (n as f64).sqrt();
                notes.push(format!(
                    "λ={lambda}: {} it, audit kvl {:.1e} device {:.1e} (2-norm <= {two_norm:.1e})",
                    r.report.iterations, r.audit.kvl, r.audit.device
                ));
                sols.push(r.current.samples().clone());
            }
            Err(e) => {
                ok = false;
                notes.push(format!("λ={lambda}: {e}"));
            }
        }
    }
    let spread = sols
        .iter()
        .flat_map(|a| sols.iter().map(move |b| (a - b).amax()))
        .fold(0.0, f64::max);
    ok &= sols.len() == 3 && spread <= 1e-6;
    let on: Vec<bool> = sols.first().map(|i| i.iter().map(|&x| x > 1e-3).collect()).unwrap_or_default();
    let count = on.iter().filter(|&&b| b).count();
    let runs = cyclic_runs(&on);
    ok &= count > 0 && count < n && runs == 1;
    outcome(
        ok,
        format!(
            "{}; spread {spread:.1e}; diode on for {count}/{n} samples in {runs} interval(s)",
            notes.join(", ")
        ),
    )
}

fn c3_contraction() -> Outcome {
    let n = 500;
    let g = g_rc(n);
    let (m, l) = constants_affine(g.affine().expect("G_RC collapses to an affine map"));
    let bound = 1.0 - m * m / (l * l);
    let drive = sample_drive(&DriveSpec::sine(1.0, 1.0), n, 1.0).unwrap();
    let dg = shift(g, drive.samples().clone()).unwrap();
    let iters = 2000;
    let cfg = SolverConfig::default()
        .with_algorithm(Algorithm::ForwardStep)
        .with_alpha(m / (l * l))
        .with_tol(1e-300)
        .with_max_iter(iters);
    let ratio = match forward_step(dg.as_ref(), &cfg) {
        Ok(r) => {
            let h = &r.residual_history;
            (h[h.len() - 1] / h[0]).powf(1.0 / (h.len() - 1) as f64)
        }
        Err(e) => return outcome(false, format!("forward step failed: {e}")),
    };
    let rate_ok = ratio <= bound + 1e-6;

    let s = 99f64.sqrt();
    let skew = AffineOperator::new(DMatrix::from_row_slice(2, 2, &[1.0, -s, s, 1.0]), Vector::from_element(2, 1.0)).unwrap();
    let c = skew.constants_affine();
    let cfg = SolverConfig::default().with_alpha(4.0 * c.m / (c.l * c.l)).with_max_iter(100_000);
    let (diverged, neg) = match forward_step(&skew, &cfg) {
        Err(Error::Diverged { iteration, residual }) => (true, format!("diverged at {iteration} (residual {residual:.1e})")),
        Err(e) => (false, e.to_string()),
        Ok(r) => (false, format!("no divergence, converged={}", r.converged)),
    };
    outcome(
        rate_ok && diverged,
        format!(
            "m={m:.4} L={l:.2}: mean ratio {ratio:.12} vs bound {bound:.12} over {iters} steps; \
             L/m=10 at α=4m/L²: {neg}"
        ),
    )
}

fn c4_discretization() -> Outcome {
    let mut worst_block = 0.0f64;
    for n in [4, 50, 500] {
        let d = make_derivative(n, 1.0).unwrap();
        let j = make_integral(n, 1.0).unwrap();
        let p = d.truncated_matrix() * j.truncated_matrix();
        worst_block = worst_block.max((p - DMatrix::identity(n - 1, n - 1)).amax());
    }
    let n = 50;
    let d = make_derivative(n, 1.0).unwrap();
    let j = make_integral(n, 1.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let (mut worst_jd, mut worst_mean) = (0.0f64, 0.0f64);
    for _ in 0..100 {
        // J fixes the constant through the last sample.
        let mut u = Vector::from_fn(n, |_, _| rng.gen_range(-1.0..1.0));
        u[n - 1] = 0.0;
        let du = d.apply(&u).unwrap();
        worst_mean = worst_mean.max(du.mean().abs() / du.amax().max(1.0));
        let back = j.apply(&du).unwrap();
        worst_jd = worst_jd.max((back - &u).amax() / u.amax());
    }
    outcome(
        worst_block <= 1e-13 && worst_jd <= 1e-12 && worst_mean <= 1e-12,
        format!("D·J block deviation {worst_block:.1e}; J(D(u)) rel {worst_jd:.1e}; mean(Du) {worst_mean:.1e}"),
    )
}

/// `Re[Z·e^{j(2πt − π/2)}]` for `Z = R/(1 + j2πRC)`.
fn phasor(t: f64) -> f64 {
    let w = 2.0 * PI;
    let den = 1.0 + w * w;
    let (zr, zi) = (1.0 / den, -w / den);
    let th = w * t - PI / 2.0;
    zr * th.cos() - zi * th.sin()
}

fn rc_error(n: usize) -> Result<(f64, f64), Error> {
    let rc = OnePort::parallel(vec![OnePort::resistor(1.0), OnePort::capacitor(1.0)]).unwrap();
    let drive = sample_drive(&DriveSpec::sine(1.0, 1.0), n, 1.0)?;
    let r = solve_problem(&DriveProblem::new(rc, drive, DriveKind::Current)?, &SolverConfig::default())?;
    let err = (0..n)
        .map(|k| (r.voltage.samples()[k] - phasor(k as f64 / n as f64)).abs())
        .fold(0.0, f64::max);
    let amp = 1.0 / (1.0 + 4.0 * PI * PI).sqrt();
    Ok((err, amp))
}

fn c5_phasor() -> Outcome {
    match (rc_error(500), rc_error(1000)) {
        (Ok((e500, amp)), Ok((e1000, _))) => outcome(
            e500 <= 0.02 * amp && e1000 < e500,
            format!(
                "max error {:.3}% of amplitude at N=500, {:.3}% at N=1000",
                100.0 * e500 / amp,
                100.0 * e1000 / amp
            ),
        ),
        (a, b) => outcome(false, format!("{:?} {:?}", a.err(), b.err())),
    }
}

/// Leaves: resistor, capacitor, inductor, monotone PWL law, or a diode with
/// a parallel leak (a bare diode in series with a capacitor leaves almost no
/// admissible currents).
fn random_leaf(rng: &mut ChaCha8Rng) -> OnePort {
    match rng.gen_range(0..5) {
        0 => OnePort::resistor(rng.gen_range(0.2..5.0)),
        1 => OnePort::capacitor(rng.gen_range(0.1..3.0)),
        2 => OnePort::inductor(rng.gen_range(0.1..3.0)),
        3 => {
            let (a, b, c) = (rng.gen_range(0.1..2.0), rng.gen_range(0.0..1.0), rng.gen_range(0.1..3.0));
            OnePort::pwl(vec![(-1.0, -a), (0.0, 0.0), (1.0, b), (2.0, b + c)]).unwrap()
        }
        _ => OnePort::parallel(vec![
            OnePort::diode(ShockleyDiode::default()),
            OnePort::resistor(rng.gen_range(0.5..20.0)),
        ])
        .unwrap(),
    }
}

fn random_tree(rng: &mut ChaCha8Rng, depth: u32) -> OnePort {
    if depth == 0 || rng.gen_bool(0.3) {
        return random_leaf(rng);
    }
    let children = (0..rng.gen_range(2..=3)).map(|_| random_tree(rng, depth - 1)).collect();
    if rng.gen_bool(0.5) {
        OnePort::series(children).unwrap()
    } else {
        OnePort::parallel(children).unwrap()
    }
}

fn c6_monotonicity() -> Outcome {
    let trials = 1000;
    let mut failures = Vec::new();
    let mut skipped = 0;
    let diode = lift_pointwise(Arc::new(ShockleyDiode::default()), 64).unwrap();
    let named: [(&str, RelationRef, f64); 2] = [("diode", diode, 0.5), ("G_RC", g_rc(64), 0.0)];
    for (name, rel, center) in named {
        let r = check_monotone(rel.as_ref(), &mut RandomSampler::new(6).with_center(center), trials);
        skipped += r.skipped;
        if !r.passed() || r.trials == 0 {
            failures.push(format!("{name}: {r}"));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let n = 4;
    for k in 0..50 {
        let t = random_tree(&mut rng, 3);
        let rel = match t.relation(Orientation::Impedance, n, 1.0) {
            Ok(r) => r,
            Err(e) => {
                failures.push(format!("tree {k}: {e}"));
                continue;
            }
        };
        let r = check_monotone(rel.as_ref(), &mut RandomSampler::new(k).with_center(0.3), trials);
        skipped += r.skipped;
        if !r.passed() {
            failures.push(format!("tree {k} {t:?}: {r}"));
        }
    }
    outcome(
        failures.is_empty(),
        if failures.is_empty() {
            format!("diode, G_RC and 50 trees x {trials} trials, no violations ({skipped} samples outside domains)")
        } else {
            failures.join("; ")
        },
    )
}

/// Root of `x + λ·v(x) = z` for the diode law by bisection on `(−Is, hi]`.
fn bisect_diode(d: &ShockleyDiode, z: f64, lambda: f64) -> f64 {
    let f = |x: f64| x + lambda * d.n * d.vt * (x / d.is).ln_1p() - z;
    let mut lo = -d.is;
    let mut hi = z.max(0.0) + 1.0;
    while f(hi) < 0.0 {
        hi *= 2.0;
    }
    for _ in 0..400 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

fn c7_resolvents() -> Outcome {
    let n = 64;
    let diode = lift_pointwise(Arc::new(ShockleyDiode::default()), n).unwrap();
    let rd = check_resolvent(diode.as_ref(), &mut RandomSampler::new(7).with_center(0.5), &LAMBDAS, 100);
    let rg = check_resolvent(g_rc(n).as_ref(), &mut RandomSampler::new(7), &LAMBDAS, 100);
    let d = ShockleyDiode::default();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let z = rng.gen_range(-2.0..3.0);
        let lambda = 10f64.powf(rng.gen_range(-2.0..2.0));
        let newton = d.resolvent(z, lambda).unwrap_or(f64::NAN);
        let oracle = bisect_diode(&d, z, lambda);
        let err = (newton - oracle).abs() / oracle.abs().max(1.0);
        worst = if err.is_nan() { f64::INFINITY } else { worst.max(err) };
    }
    outcome(
        rd.worst_margin <= 1e-8 && rg.worst_margin <= 1e-8 && rd.passed() && rg.passed() && worst <= 1e-10,
        format!(
            "diode worst {:.1e}, G_RC worst {:.1e}; Newton vs bisection {worst:.1e}",
            rd.worst_margin, rg.worst_margin
        ),
    )
}

fn random_monotone(rng: &mut ChaCha8Rng, n: usize, shift: f64) -> DMatrix<f64> {
    let p = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
    let k = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
    p.transpose() * &p + (&k - k.transpose()) + DMatrix::identity(n, n) * shift
}

fn c8_coercivity_relations() -> Outcome {
    let trials = 1000;
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut ok = true;
    let (mut worst_inv, mut worst_lip, mut literal) = (1.0f64, 0.0f64, 1.0f64);
    for k in 0..10 {
        let a = random_monotone(&mut rng, 4, 0.5);
        let s: RelationRef = Arc::new(AffineOperator::linear(a).unwrap());
        let m = estimate_coercivity(s.as_ref(), &mut RandomSampler::new(k), trials).value;
        let c_inv = estimate_cocoercivity(invert(s.clone()).as_ref(), &mut RandomSampler::new(k), trials).value;
        // Coercivity m of S is cocoercivity m of S⁻¹.
        let q = c_inv / m;
        ok &= (0.5..=2.0).contains(&q);
        worst_inv = if (q - 1.0).abs() > (worst_inv - 1.0).abs() { q } else { worst_inv };
        let q_lit = c_inv * m;
        literal = if (q_lit - 1.0).abs() > (literal - 1.0).abs() { q_lit } else { literal };

        let beta = estimate_cocoercivity(s.as_ref(), &mut RandomSampler::new(100 + k), trials).value;
        let l = estimate_lipschitz(s.as_ref(), &mut RandomSampler::new(100 + k), trials).value;
        let q = l * beta;
        ok &= beta > 0.0 && q <= 2.0;
        worst_lip = worst_lip.max(q);
    }
    let cap: RelationRef = Arc::new(capacitor_admittance(&Capacitor::new(1.0).unwrap(), 64, 1.0).unwrap());
    let mc = estimate_coercivity(cap.as_ref(), &mut RandomSampler::new(8), trials).value;
    ok &= (-1e-10..=1e-6).contains(&mc);
    outcome(
        ok,
        format!(
            "cocoercivity(S⁻¹)/coercivity(S) worst {worst_inv:.3}; L·β worst {worst_lip:.3}; capacitor coercivity {mc:.1e}; \
             reciprocal form cocoercivity(S⁻¹)·coercivity(S) reaches {literal:.3} (not asserted)"
        ),
    )
}

fn bundled(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("netlists").join(name)
}

fn c9_cli_determinism() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let bin = env!("CARGO_BIN_EXE_monoport");
    let mut notes = Vec::new();
    let mut ok = true;
    for run in ["envelope_current.run.json", "envelope_voltage.run.json", "rc_parallel.run.json"] {
        let mut outs = Vec::new();
        for k in 0..2 {
            let csv = dir.path().join(format!("{run}.{k}.csv"));
            let status = Command::new(bin)
                .args(["solve", "--seed", "9", "-o"])
                .arg(&csv)
                .arg(bundled(run))
                .output()
                .unwrap();
            ok &= status.status.success();
            outs.push(std::fs::read(&csv).unwrap_or_default());
        }
        let same = !outs[0].is_empty() && outs[0] == outs[1];
        ok &= same;
        notes.push(format!("{run}: {}", if same { "identical" } else { "DIFFERENT" }));
    }
    let mut validated = 0;
    for entry in std::fs::read_dir(bundled("")).unwrap() {
        let path = entry.unwrap().path();
        let name = path.file_name().unwrap().to_string_lossy().into_owned();
        if !name.ends_with(".json") || name.ends_with(".run.json") {
            continue;
        }
        let doc: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
        match netlist::validate(&doc).and_then(|_| Netlist::from_value(doc)) {
            Ok(_) => validated += 1,
            Err(e) => {
                ok = false;
                notes.push(format!("{name}: {e}"));
            }
        }
    }
    ok &= validated > 0;
    outcome(ok, format!("{}; {validated} bundled netlists validate", notes.join(", ")))
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() -> ExitCode {
    let criteria: [Criterion; 9] = [
        ("envelope detector, current drive, forward step", c1_envelope_current_forward_step),
        ("envelope detector, voltage drive, Douglas-Rachford", c2_envelope_voltage_dr),
        ("forward-step contraction bound", c3_contraction),
        ("discretization identities", c4_discretization),
        ("LTI phasor oracle", c5_phasor),
        ("monotonicity suite", c6_monotonicity),
        ("resolvent identities", c7_resolvents),
        ("coercivity and cocoercivity relations", c8_coercivity_relations),
        ("CLI determinism and bundled netlists", c9_cli_determinism),
    ];
    let mut failed = 0;
    for (k, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let o = run();
        let secs = start.elapsed().as_secs_f64();
        println!(
            "criterion {}: {} | {name} | {} [{secs:.1}s]",
            k + 1,
            if o.pass { "pass" } else { "FAIL" },
            o.detail
        );
        failed += usize::from(!o.pass);
    }
    println!("acceptance: {}/{} criteria pass", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
