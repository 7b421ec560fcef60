//! Subcommand implementations. Each returns the `results` part of a report.

use crate::json::*;
use crate::report::{digest, Report};
use crate::{Action, BoundKind, CertAction, CertKind, Cli, CliError, Command, EmbedKind, OracleArgs};
use commrank::bounds::{det_identity_residual, rotate_to_invertible};
use commrank::embed::{embedding_to_rank_bound, satisfies_pair_bound, Embedding};
use commrank::ind::{build_ind_certificate, indordi_check, jennrich_decompose, verify_ind_certificate};
use commrank::matrix::check_invertible;
use commrank::oracle::{rank_bracket, rank_lower};
use commrank::ortho::{build_rank_certificate, odeco_check, odeco_decompose, verify_rank_certificate, Verification};
use commrank::plant::{gaussian_matrix, seeded};
use commrank::{
    commuting_embed, first_slice_identity_embed, koszul_bound, strassen_bound, strassen_pair_embed, symmetrize_decomposition,
    trivial_embed_2n, Axis, Complex64, DMatrix, Decomposition, Field, OdecoFlavor, Tensor3, TolerancePolicy,
};
use serde_json::{json, Value};
use std::io::Read;
use std::path::Path;

type CliResult<T> = Result<T, CliError>;

macro_rules! on_tensor {
    ($any:expr, $t:ident => $body:expr) => {
        match $any {
            AnyTensor::Real($t) => $body,
            AnyTensor::Complex($t) => $body,
        }
    };
}

fn read_json(path: &Path) -> CliResult<Value> {
    let mut text = String::new();
    if path.as_os_str() == "-" {
        std::io::stdin()
            .read_to_string(&mut text)
            .map_err(|e| CliError::Input(format!("stdin: {e}")))?;
    } else {
        text = std::fs::read_to_string(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    }
    serde_json::from_str(&text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

fn read_tensor(path: &Path) -> CliResult<AnyTensor> {
    match tensor_from_json(&read_json(path)?) {
        Ok(t) => Ok(t),
        Err(TensorLoadError::Format(e)) => Err(CliError::Input(format!("{}: {e}", path.display()))),
        Err(TensorLoadError::NotSymmetric(e)) => Err(e.into()),
    }
}

fn policy(cli: &Cli) -> CliResult<TolerancePolicy> {
    let Some(path) = &cli.tol_config else {
        return Ok(TolerancePolicy::default());
    };
    let pol: TolerancePolicy = serde_json::from_value(read_json(path)?)
        .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    pol.validate()?;
    Ok(pol)
}

fn flavor_arg(s: &str) -> CliResult<OdecoFlavor> {
    s.parse().map_err(|e: commrank::Error| CliError::Precondition(e.to_string()))
}

/// Symmetric flavors need the symmetric flag; an unflagged input gets it when
/// it is exactly symmetric.
fn flagged_for<T: JsonScalar>(t: Tensor3<T>, flavor: OdecoFlavor) -> CliResult<Tensor3<T>> {
    if flavor.symmetric && !t.is_symmetric() {
        return Ok(t.into_symmetric()?);
    }
    Ok(t)
}

pub fn execute(cli: &Cli) -> CliResult<Report> {
    let pol = policy(cli)?;
    let seed = cli.seed;
    let (command, input, results) = match &cli.command {
        Command::Bound { method, input } => {
            let t = read_tensor(&input.input)?;
            let name = format!("bound {}", value_name(*method));
            let res = on_tensor!(&t, t => bound(t, *method, &pol, seed)?);
            (name, Some(t), res)
        }
        Command::Odeco { action, flavor, input } => {
            let t = read_tensor(&input.input)?;
            let flavor = flavor_arg(flavor)?;
            let name = format!("odeco {}", value_name(*action));
            let res = on_tensor!(&t, t => odeco(flagged_for(t.clone(), flavor)?, *action, flavor, &pol, seed)?);
            (name, Some(t), res)
        }
        Command::Ind { action, input } => {
            let t = read_tensor(&input.input)?;
            let name = format!("ind {}", value_name(*action));
            let res = on_tensor!(&t, t => ind(t, *action, &pol, seed)?);
            (name, Some(t), res)
        }
        Command::Embed {
            kind,
            input,
            decomposition,
            extract,
            oracle,
        } => {
            let t = read_tensor(&input.input)?;
            let name = format!("embed {}", value_name(*kind));
            let dec = decomposition.as_deref().map(read_json).transpose()?;
            let res = on_tensor!(&t, t => embed(t, *kind, dec.as_ref(), *extract, oracle, &pol, seed)?);
            (name, Some(t), res)
        }
        Command::Certify {
            kind,
            action,
            input,
            decomposition,
            flavor,
            symmetric,
            certificate,
            oracle,
        } => {
            let name = format!("certify {} {}", value_name(*kind), value_name(*action));
            match action {
                CertAction::Build => {
                    let path = input
                        .as_deref()
                        .ok_or_else(|| CliError::Precondition("`certify build` needs --input".into()))?;
                    let t = read_tensor(path)?;
                    let dec = decomposition.as_deref().map(read_json).transpose()?;
                    let res = on_tensor!(&t, t => certify_build(
                        t, *kind, dec.as_ref(), flavor.as_deref(), *symmetric, oracle, &pol, seed
                    )?);
                    (name, Some(t), res)
                }
                CertAction::Verify => {
                    let path = certificate
                        .as_deref()
                        .ok_or_else(|| CliError::Precondition("`certify verify` needs --certificate".into()))?;
                    let v = read_json(path)?;
                    let cert = unwrap_report(&v, "certificate");
                    let res = certify_verify(cert, *kind, &pol)?;
                    (name, None, res)
                }
            }
        }
        Command::Oracle { input, oracle, .. } => {
            let t = read_tensor(&input.input)?;
            let res = on_tensor!(&t, t => bracket(t, oracle, &pol, seed)?);
            ("oracle bracket".to_string(), Some(t), res)
        }
        Command::Selftest { count } => ("selftest".to_string(), None, selftest(*count, &pol, seed)?),
    };
    Ok(Report {
        command,
        input: input.as_ref().map(digest),
        seed,
        policy: pol,
        results,
        wall_time_ms: None,
    })
}

fn value_name<V: clap::ValueEnum>(v: V) -> String {
    v.to_possible_value().map(|p| p.get_name().to_string()).unwrap_or_default()
}

fn scalars_to_json<T: JsonScalar>(xs: &[T]) -> Value {
    Value::Array(xs.iter().map(|x| x.to_json()).collect())
}

fn to_value<S: serde::Serialize>(s: &S) -> Value {
    serde_json::to_value(s).expect("results serialize")
}

fn strassen_results<T: JsonScalar>(t: &Tensor3<T>, pol: &TolerancePolicy, seed: u64) -> CliResult<Value> {
    let z = t.slices(Axis::Z);
    let first_ok = z.len() == 3 && z[0].is_square() && check_invertible(&z[0], pol).is_ok();
    let (rotated, coeffs) = if first_ok {
        (t.clone(), None)
    } else {
        let rot = rotate_to_invertible(t, pol, seed)?;
        (rot.tensor, Some(rot.coeffs))
    };
    let mut v = to_value(&strassen_bound(&rotated, pol)?);
    if let Some(c) = coeffs {
        v["rotation"] = scalars_to_json(&c);
    }
    Ok(v)
}

fn bound<T: JsonScalar>(t: &Tensor3<T>, kind: BoundKind, pol: &TolerancePolicy, seed: u64) -> CliResult<Value> {
    Ok(match kind {
        BoundKind::Strassen => strassen_results(t, pol, seed)?,
        BoundKind::Koszul => {
            let mut v = to_value(&koszul_bound(t, pol)?);
            if let Ok(res) = det_identity_residual(t, pol) {
                v["det_identity_residual"] = json!(res);
            }
            v
        }
        BoundKind::All => json!({
            "lower": to_value(&rank_lower(t, pol, seed)),
            "strassen": strassen_results(t, pol, seed).ok(),
            "koszul": koszul_bound(t, pol).ok().map(|b| to_value(&b)),
        }),
    })
}

fn odeco<T: JsonScalar>(t: Tensor3<T>, action: Action, flavor: OdecoFlavor, pol: &TolerancePolicy, seed: u64) -> CliResult<Value> {
    Ok(match action {
        Action::Check => to_value(&odeco_check(&t, flavor, pol)?),
        Action::Decompose => {
            let d = odeco_decompose(&t, flavor, pol, seed)?;
            json!({
                "flavor": flavor,
                "weights": scalars_to_json(&d.weights),
                "residual": d.residual,
                "factors": decomposition_to_json(&d.factors),
                "decomposition": decomposition_to_json(&d.to_decomposition()),
            })
        }
    })
}

fn ind<T: JsonScalar>(t: &Tensor3<T>, action: Action, pol: &TolerancePolicy, seed: u64) -> CliResult<Value> {
    Ok(match action {
        Action::Check => {
            let r = indordi_check(t, pol, seed)?;
            json!({
                "passed": r.passed,
                "witness_coeffs": scalars_to_json(&r.witness_coeffs),
                "witness_relative_smallest_singular_value": r.witness_relative_smallest_singular_value,
                "max_commutator": r.max_commutator,
                "non_diagonalizable": r.non_diagonalizable,
                "max_defect": r.max_defect,
            })
        }
        Action::Decompose => {
            let d = jennrich_decompose(t, pol, seed)?;
            let residual = t.relative_distance(&d.assemble(t.shape())?)?;
            json!({ "residual": residual, "decomposition": decomposition_to_json(&d) })
        }
    })
}

/// Decomposition from a file (or a report holding one), else the ALS witness
/// of the rank bracket.
fn obtain_decomposition<T: JsonScalar>(
    t: &Tensor3<T>,
    dec: Option<&Value>,
    oracle: &OracleArgs,
    pol: &TolerancePolicy,
    seed: u64,
) -> CliResult<(Decomposition<T>, &'static str)> {
    if let Some(v) = dec {
        return Ok((decomposition_from_json(unwrap_report(v, "decomposition"))?, "input"));
    }
    oracle_decomposition(t, oracle, pol, seed)
}

/// As [`obtain_decomposition`], but without an input file the result is
/// symmetric: the odeco decomposition when there is one, else the
/// symmetrized ALS witness (at most four times as many terms).
fn obtain_symmetric_decomposition<T: JsonScalar>(
    t: &Tensor3<T>,
    dec: Option<&Value>,
    oracle: &OracleArgs,
    pol: &TolerancePolicy,
    seed: u64,
) -> CliResult<(Decomposition<T>, &'static str)> {
    if dec.is_some() {
        return obtain_decomposition(t, dec, oracle, pol, seed);
    }
    let flavor = OdecoFlavor {
        symmetric: true,
        field: T::FIELD,
    };
    if odeco_check(t, flavor, pol).is_ok_and(|r| r.odeco) {
        if let Ok(d) = odeco_decompose(t, flavor, pol, seed) {
            return Ok((d.to_decomposition(), "odeco"));
        }
    }
    let (d, _) = oracle_decomposition(t, oracle, pol, seed)?;
    Ok((symmetrize_decomposition(&d)?, "oracle_symmetrized"))
}

fn oracle_decomposition<T: JsonScalar>(
    t: &Tensor3<T>,
    oracle: &OracleArgs,
    pol: &TolerancePolicy,
    seed: u64,
) -> CliResult<(Decomposition<T>, &'static str)> {
    let [m, n, p] = t.shape();
    let r_max = oracle.r_max.unwrap_or((m * n).min(n * p).min(m * p).max(1));
    let b = rank_bracket(t, r_max, oracle.budget, seed, pol)?;
    match b.witness {
        Some(d) => Ok((d, "oracle")),
        None => Err(CliError::Precondition(format!(
            "no decomposition with at most {r_max} terms found; pass --decomposition"
        ))),
    }
}

fn embedding_json<T: JsonScalar>(e: &Embedding<T>, pol: &TolerancePolicy) -> CliResult<Value> {
    Ok(json!({
        "size": e.size,
        "properties": to_value(&e.properties),
        "blocks_preserved": e.blocks_preserved(),
        "pair_bound_satisfied": satisfies_pair_bound(e, pol)?,
        "originals": matrices_to_json(&e.originals),
        "extended": matrices_to_json(&e.extended),
    }))
}

fn embed<T: JsonScalar>(
    t: &Tensor3<T>,
    kind: EmbedKind,
    dec: Option<&Value>,
    extract: bool,
    oracle: &OracleArgs,
    pol: &TolerancePolicy,
    seed: u64,
) -> CliResult<Value> {
    let z = t.slices(Axis::Z);
    let mut source = None;
    let e = match kind {
        EmbedKind::Trivial => trivial_embed_2n(&z, pol)?,
        EmbedKind::Pair => {
            if z.len() != 2 {
                return Err(CliError::Precondition(format!("`embed pair` needs 2 slices, got {}", z.len())));
            }
            strassen_pair_embed(&z[0], &z[1], pol)?
        }
        EmbedKind::Commuting => {
            let (d, s) = obtain_decomposition(t, dec, oracle, pol, seed)?;
            source = Some(s);
            commuting_embed(&z, &d, pol)?
        }
        EmbedKind::FirstIdentity => {
            let (d, s) = obtain_decomposition(t, dec, oracle, pol, seed)?;
            source = Some(s);
            first_slice_identity_embed(t, &d, pol)?
        }
    };
    let mut v = embedding_json(&e, pol)?;
    if let Some(s) = source {
        v["decomposition_source"] = json!(s);
    }
    if extract {
        let ub = embedding_to_rank_bound(&e, pol, seed)?;
        v["rank_upper_bound"] = json!({
            "size": ub.size,
            "residual": ub.residual,
            "decomposition": decomposition_to_json(&ub.decomposition),
        });
    }
    Ok(v)
}

fn verification_json(v: &Verification) -> Value {
    json!({ "passed": v.passed, "failing": v.failing(), "checks": to_value(&v.checks) })
}

#[allow(clippy::too_many_arguments)]
fn certify_build<T: JsonScalar>(
    t: &Tensor3<T>,
    kind: CertKind,
    dec: Option<&Value>,
    flavor: Option<&str>,
    symmetric: bool,
    oracle: &OracleArgs,
    pol: &TolerancePolicy,
    seed: u64,
) -> CliResult<Value> {
    Ok(match kind {
        CertKind::Ortho => {
            let flavor = match flavor {
                Some(f) => flavor_arg(f)?,
                None => OdecoFlavor {
                    symmetric: false,
                    field: T::FIELD,
                },
            };
            let t = flagged_for(t.clone(), flavor)?;
            let (d, source) = if flavor.symmetric {
                obtain_symmetric_decomposition(&t, dec, oracle, pol, seed)?
            } else {
                obtain_decomposition(&t, dec, oracle, pol, seed)?
            };
            let cert = build_rank_certificate(&t, &d, flavor, pol, seed)?;
            json!({
                "decomposition_source": source,
                "verification": verification_json(&verify_rank_certificate(&cert, pol)),
                "certificate": rank_certificate_to_json(&cert),
            })
        }
        CertKind::Ind => {
            let t = if symmetric && !t.is_symmetric() { t.clone().into_symmetric()? } else { t.clone() };
            let (d, source) = if symmetric {
                obtain_symmetric_decomposition(&t, dec, oracle, pol, seed)?
            } else {
                obtain_decomposition(&t, dec, oracle, pol, seed)?
            };
            let cert = build_ind_certificate(&t, &d, symmetric, pol, seed)?;
            json!({
                "decomposition_source": source,
                "verification": verification_json(&verify_ind_certificate(&cert, pol)),
                "certificate": ind_certificate_to_json(&cert),
            })
        }
    })
}

fn certify_verify(cert: &Value, kind: CertKind, pol: &TolerancePolicy) -> CliResult<Value> {
    let stated = cert.get("kind").and_then(Value::as_str);
    let expected = value_name(kind);
    if stated.is_some_and(|k| k != expected) {
        return Err(CliError::Precondition(format!(
            "certificate is of kind {}, expected {expected}",
            stated.unwrap_or_default()
        )));
    }
    let v = match (kind, certificate_field(cert)?) {
        (CertKind::Ortho, Field::Real) => verify_rank_certificate(&rank_certificate_from_json::<f64>(cert)?, pol),
        (CertKind::Ortho, Field::Complex) => verify_rank_certificate(&rank_certificate_from_json::<Complex64>(cert)?, pol),
        (CertKind::Ind, Field::Real) => verify_ind_certificate(&ind_certificate_from_json::<f64>(cert)?, pol),
        (CertKind::Ind, Field::Complex) => verify_ind_certificate(&ind_certificate_from_json::<Complex64>(cert)?, pol),
    };
    let r = cert.get("r").cloned().unwrap_or(Value::Null);
    let mut out = verification_json(&v);
    out["r"] = r;
    Ok(out)
}

fn bracket<T: JsonScalar>(t: &Tensor3<T>, oracle: &OracleArgs, pol: &TolerancePolicy, seed: u64) -> CliResult<Value> {
    let [m, n, p] = t.shape();
    let r_max = oracle.r_max.unwrap_or((m * n).min(n * p).min(m * p));
    let b = rank_bracket(t, r_max, oracle.budget, seed, pol)?;
    let fits: Vec<Value> = b.fits.iter().map(|(r, res)| json!({ "r": r, "residual": res })).collect();
    Ok(json!({
        "lower": to_value(&b.lower),
        "upper": b.upper,
        "resolved": b.resolved,
        "r_max": r_max,
        "budget": oracle.budget,
        "fits": fits,
        "witness": b.witness.as_ref().map(decomposition_to_json),
    }))
}

/// Residual of `det L(T) = det(A₁)² det(−G)` over seeded random `n × n × 3`
/// tensors (`n = 1..5`) whose first slice is kept well conditioned.
fn selftest(count: usize, pol: &TolerancePolicy, seed: u64) -> CliResult<Value> {
    let mut rng = seeded(seed);
    let mut worst: f64 = 0.0;
    let mut per_n = vec![0.0_f64; 5];
    for i in 0..count {
        let n = 1 + i % 5;
        let mut z: Vec<DMatrix<f64>> = (0..3).map(|_| gaussian_matrix(n, n, &mut rng)).collect();
        z[0] += DMatrix::identity(n, n) * (2.0 * n as f64);
        let t = Tensor3::from_slices(Axis::Z, &z)?;
        let res = det_identity_residual(&t, pol)?;
        worst = worst.max(res);
        per_n[n - 1] = per_n[n - 1].max(res);
    }
    Ok(json!({
        "count": count,
        "max_residual": worst,
        "max_residual_by_n": per_n,
        "passed": worst < 1e-8,
    }))
}
