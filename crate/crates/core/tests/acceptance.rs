//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
//! exits nonzero when any criterion fails.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::time::{Duration, Instant};

use folhodge::catalog::{
    golden_lambda, make_carriere, make_carriere_product, make_flat_torus, suspension_report, CircleMode,
    SuspensionInput,
};
use folhodge::exterior::Orientation;
use folhodge::hodge::{
    cohomology_report, conformal_compare, duality_check, hodge_split, spectrum, weitzenbock_flat,
    weitzenbock_functions, Tolerances,
};
use folhodge::linalg::{c64, matvec};
use folhodge::model::{validate, ActiveAxis, BasicComplex, CoframeModel, FailureCode, FourierSeries, FourierTerm};
use folhodge::operators::{identity_suite, Assembler, OperatorName};
use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn ensure(ok: bool, msg: impl Into<String>) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn complex(model: CoframeModel) -> Result<BasicComplex, String> {
    BasicComplex::new(model).map_err(|e| e.to_string())
}

fn within(limit: Duration, start: Instant) -> Result<(), String> {
    let took = start.elapsed();
    ensure(took < limit, format!("took {took:.1?}, limit {limit:?}"))
}

fn identity_suite_on_catalog() -> Outcome {
    let start = Instant::now();
    let lambda = golden_lambda();
    let models = [
        ("carriere", make_carriere(lambda, 32)),
        ("flat-torus", make_flat_torus(2, 32, &FourierSeries::zero())),
        (
            "carriere-product m=1",
            make_carriere_product(lambda, 1, 32, CircleMode::Invariant),
        ),
        (
            "carriere-product m=2",
            make_carriere_product(lambda, 2, 32, CircleMode::Invariant),
        ),
    ];
    let mut worst = 0.0f64;
    let mut count = 0;
    for (name, model) in models {
        let cx = complex(model.map_err(|e| e.to_string())?)?;
        let report = identity_suite(&cx).map_err(|e| e.to_string())?;
        for required in [
            "d-squared",
            "d-tilde-squared",
            "delta-tilde-squared",
            "star-laplacian",
            "adjoint-d-tilde",
        ] {
            ensure(
                report.identities().contains(&required),
                format!("{name}: {required} missing"),
            )?;
        }
        if cx.q() % 2 == 0 {
            ensure(
                report.identities().contains(&"involution-squared"),
                format!("{name}: involution missing"),
            )?;
            ensure(
                report.identities().contains(&"involution-dirac"),
                format!("{name}: anticommutation missing"),
            )?;
        }
        if let Some(w) = report.worst() {
            ensure(
                w.residual < 1e-10,
                format!("{name}: {} degree {} residual {:e}", w.identity, w.degree, w.residual),
            )?;
        }
        worst = worst.max(report.max_residual());
        count += report.entries.len();
    }
    within(Duration::from_secs(60), start)?;
    Ok(format!("{count} residuals, max {worst:.2e}"))
}

fn carriere_cohomology() -> Outcome {
    let start = Instant::now();
    let r = cohomology_report(
        &make_carriere(golden_lambda(), 64).map_err(|e| e.to_string())?,
        Tolerances::default(),
    )
    .map_err(|e| e.to_string())?;
    ensure(r.betti == [1, 1, 0], format!("betti {:?}", r.betti))?;
    ensure(r.twisted == [0, 0, 0], format!("twisted {:?}", r.twisted))?;
    ensure(
        !r.taut && r.signature == Some(0) && r.euler == 0 && r.twisted_euler == 0,
        format!("{r:?}"),
    )?;
    ensure(r.reliable && !r.refined, "threshold band not clear at N=64")?;
    within(Duration::from_secs(10), start)?;
    Ok(format!("betti {:?}, twisted {:?}", r.betti, r.twisted))
}

fn carriere_spectrum() -> Outcome {
    let cx = complex(make_carriere(golden_lambda(), 64).map_err(|e| e.to_string())?)?;
    let s = spectrum(&cx, OperatorName::LaplacianTilde, 0, 3, Tolerances::default()).map_err(|e| e.to_string())?;
    let base = 0.25 * golden_lambda().ln().powi(2);
    let next = 4.0 * PI * PI + base;
    let e = &s.eigenvalues;
    ensure((e[0] - base).abs() < 1e-6, format!("lowest {} vs {base}", e[0]))?;
    ensure(
        (e[1] - next).abs() < 1e-6 && (e[2] - next).abs() < 1e-6,
        format!("next {} {} vs {next}", e[1], e[2]),
    )?;
    ensure((e[3] - next).abs() > 1.0, "multiplicity exceeds 2")?;
    let mult = s.multiplicities(4);
    ensure(mult[1].1 == 2, format!("multiplicities {mult:?}"))?;
    Ok(format!("{:.7}, {:.7} (x2)", e[0], e[1]))
}

fn poincare_duality() -> Outcome {
    let cx = complex(make_carriere(golden_lambda(), 64).map_err(|e| e.to_string())?)?;
    let r = duality_check(&cx, 20, Tolerances::default()).map_err(|e| e.to_string())?;
    ensure(
        r.max_eigenvalue_gap() < 1e-8,
        format!("eigenvalue gap {:e}", r.max_eigenvalue_gap()),
    )?;
    ensure(
        r.max_vector_residual() < 1e-8,
        format!("vector residual {:e}", r.max_vector_residual()),
    )?;
    Ok(format!(
        "gap {:.2e}, vector residual {:.2e}",
        r.max_eigenvalue_gap(),
        r.max_vector_residual()
    ))
}

fn conformal_invariance() -> Outcome {
    let model = make_carriere(golden_lambda(), 64).map_err(|e| e.to_string())?;
    let h = FourierSeries::single(vec![1], 0.0, 0.3);
    let r = conformal_compare(&model, &h, 10, Tolerances::default()).map_err(|e| e.to_string())?;
    ensure(r.entries.len() == 3, "expected three degrees")?;
    ensure(
        r.max_eigenvalue_gap() < 1e-8,
        format!("eigenvalue gap {:e}", r.max_eigenvalue_gap()),
    )?;
    ensure(
        r.min_simple_alignment() > 1.0 - 1e-6,
        format!("alignment {}", r.min_simple_alignment()),
    )?;
    Ok(format!(
        "gap {:.2e}, alignment 1 - {:.2e}",
        r.max_eigenvalue_gap(),
        1.0 - r.min_simple_alignment()
    ))
}

fn odd_codimension() -> Outcome {
    let model = make_carriere_product(golden_lambda(), 1, 64, CircleMode::Invariant).map_err(|e| e.to_string())?;
    let r = cohomology_report(&model, Tolerances::default()).map_err(|e| e.to_string())?;
    ensure(r.q == 3, "q should be 3")?;
    ensure(
        r.euler == 0 && r.twisted_euler == 0,
        format!("euler {} twisted {}", r.euler, r.twisted_euler),
    )?;
    ensure(r.twisted.iter().all(|&b| b == 0), format!("twisted {:?}", r.twisted))?;
    Ok(format!("betti {:?}, twisted {:?}", r.betti, r.twisted))
}

fn random_potential(rng: &mut ChaCha8Rng) -> FourierSeries {
    let modes = [[1, 0], [0, 1], [1, 1], [1, -1], [2, 0]];
    FourierSeries::from_terms(
        modes
            .iter()
            .map(|m| FourierTerm {
                mode: m.to_vec(),
                cos: rng.gen_range(-0.2..0.2),
                sin: rng.gen_range(-0.2..0.2),
            })
            .collect(),
    )
}

fn tautness() -> Outcome {
    let tol = Tolerances::default();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst = 0.0f64;
    for _ in 0..2 {
        let h = random_potential(&mut rng);
        let coarse = make_flat_torus(2, 16, &h).map_err(|e| e.to_string())?;
        let r = cohomology_report(&coarse, tol).map_err(|e| e.to_string())?;
        ensure(
            r.taut && r.twisted[0] == 1 && r.twisted[2] == 1,
            format!("flat torus {r:?}"),
        )?;
        // e^{h/2} needs the finer grid to be resolved to 1e-10
        let cx = complex(make_flat_torus(2, 32, &h).map_err(|e| e.to_string())?)?;
        let v = DVector::from_vec(cx.grid().sample(&h).iter().map(|x| c64((0.5 * x).exp())).collect());
        let lap = Assembler::new(&cx)
            .matrix(OperatorName::LaplacianTilde, 0)
            .map_err(|e| e.to_string())?;
        let rayleigh = cx.inner(0, &v, &matvec(&lap, &v)).norm() / cx.inner(0, &v, &v).re;
        ensure(rayleigh < 1e-10, format!("Rayleigh quotient {rayleigh:e}"))?;
        let s = spectrum(&cx, OperatorName::LaplacianTilde, 0, 1, tol).map_err(|e| e.to_string())?;
        let kernel = s.vectors.column(0).into_owned();
        let overlap = cx.inner(0, &kernel, &v).norm() / (cx.norm(0, &kernel) * cx.norm(0, &v));
        ensure(overlap > 1.0 - 1e-10, format!("kernel overlap {overlap}"))?;
        worst = worst.max(rayleigh);
    }
    let car = cohomology_report(&make_carriere(golden_lambda(), 64).map_err(|e| e.to_string())?, tol)
        .map_err(|e| e.to_string())?;
    ensure(
        !car.taut && car.twisted[0] == 0,
        "carriere should be nontaut with no twisted constants",
    )?;
    let line = CoframeModel {
        q: 1,
        structure: Vec::new(),
        active: vec![ActiveAxis {
            coframe: 0,
            period: 1.0,
            grid: 32,
        }],
        metric: vec![1.0],
        kappa: BTreeMap::from([(0, FourierSeries::constant(1, 0.5))]),
        orientation: Some(Orientation::Positive),
    };
    let report = validate(&line);
    ensure(
        report.has(FailureCode::NotRealizable),
        format!("q=1 constant kappa: {}", report.summary()),
    )?;
    Ok(format!("Rayleigh {worst:.2e}; carriere nontaut; q=1 rejected"))
}

fn weitzenbock() -> Outcome {
    let car = complex(make_carriere(golden_lambda(), 64).map_err(|e| e.to_string())?)?;
    let r = weitzenbock_functions(&car).map_err(|e| e.to_string())?;
    ensure(
        r.precondition < 1e-12,
        format!("delta_b kappa residual {:e}", r.precondition),
    )?;
    ensure(
        r.max_residual() < 1e-10,
        format!("functions residual {:e}", r.max_residual()),
    )?;
    let flat = complex(make_flat_torus(2, 32, &FourierSeries::zero()).map_err(|e| e.to_string())?)?;
    let f = weitzenbock_flat(&flat).map_err(|e| e.to_string())?;
    ensure(f.residuals.len() == 3, "expected degrees 0, 1, 2")?;
    ensure(
        f.max_residual() < 1e-10,
        format!("flat residual {:e}", f.max_residual()),
    )?;
    Ok(format!(
        "functions {:.2e}, flat {:.2e}",
        r.max_residual(),
        f.max_residual()
    ))
}

fn suspensions() -> Outcome {
    let two =
        suspension_report(&SuspensionInput::preset("7.2").map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
    ensure(two.betti == [1, 4, 1, 0] && two.euler == -2, format!("7.2 {two:?}"))?;
    ensure(
        two.euler_relation.to_string() == "tb2 - tb1 = -2",
        format!("7.2 relation {}", two.euler_relation),
    )?;
    let three =
        suspension_report(&SuspensionInput::preset("7.3").map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
    ensure(
        three.betti == [1, 4, 2, 4, 1] && three.euler == -4,
        format!("7.3 {three:?}"),
    )?;
    ensure(three.twisted_equal.contains(&(1, 3)), "7.3 missing tb3 = tb1")?;
    ensure(three.lower_bounds.contains(&(1, 2)), "7.3 missing tb1 >= 2")?;
    ensure(
        three.euler_relation.to_string() == "tb2 - 2tb1 = -4",
        format!("7.3 relation {}", three.euler_relation),
    )?;
    Ok("7.2 and 7.3 tables exact".into())
}

fn hodge_decomposition() -> Outcome {
    let tol = Tolerances::default();
    let flat = complex(make_flat_torus(2, 16, &FourierSeries::zero()).map_err(|e| e.to_string())?)?;
    let s = hodge_split(&flat, 1, tol).map_err(|e| e.to_string())?;
    ensure(
        (s.exact, s.coexact, s.harmonic, s.dim) == (255, 255, 2, 512),
        format!("{s:?}"),
    )?;
    ensure(s.orthogonality < 1e-9, format!("orthogonality {:e}", s.orthogonality))?;
    let car = complex(make_carriere(golden_lambda(), 64).map_err(|e| e.to_string())?)?;
    for k in 0..=2 {
        let split = hodge_split(&car, k, tol).map_err(|e| e.to_string())?;
        ensure(split.complete(), format!("carriere degree {k}: {split:?}"))?;
    }
    Ok(format!("255 + 255 + 2 = 512, orthogonality {:.2e}", s.orthogonality))
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("identity suite on catalog models", identity_suite_on_catalog),
        ("carriere cohomology", carriere_cohomology),
        ("carriere twisted spectrum", carriere_spectrum),
        ("duality of twisted spectra", poincare_duality),
        ("conformal invariance", conformal_invariance),
        ("odd codimension", odd_codimension),
        ("tautness", tautness),
        ("weitzenbock", weitzenbock),
        ("suspension bookkeeping", suspensions),
        ("hodge decomposition", hodge_decomposition),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = check();
        let took = start.elapsed();
        match outcome {
            Ok(detail) => println!("PASS {:>2} {name}: {detail} [{took:.1?}]", i + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL {:>2} {name}: {why} [{took:.1?}]", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
