use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use pbprior::quantile::{fmt_real, optimal_requirement, CurveRow};
use pbprior::risk_prior::pushforward;
use pbprior::test_bounds::comparisons_to_csv;
use pbprior::uninformed::cluster_rows_to_csv;
use pbprior::{
    catoni_bound, catoni_min_bound, compare_records, gibbs_posterior, invert_test_bound,
    parse_records, qbar_cat_lambda, run_coverage, sweep_cluster_masses, sweep_requirement_curve,
    temperature_window, theorem3_requirement, CatoniParams, DiscreteRiskPrior,
    FinitePredictorSpace, PosteriorWeights, RequirementCurve, Scenario, SyntheticWorld, TargetSpec,
};
use serde_json::{json, Value};

use crate::{
    BoundArgs, CoverageArgs, CurveArgs, Figure2Args, Figure3Args, Format, GibbsArgs, GridArgs,
    QuantileArgs, Table2Args, TargetArgs, TestboundArgs, Theorem3Args,
};

pub const TABLE2_FIXTURE: &str = include_str!("../fixtures/table2.csv");

/// A result in both output encodings.
pub struct Artifact {
    pub csv: String,
    pub json: Value,
}

impl Artifact {
    pub fn render(&self, format: Format) -> Result<String> {
        Ok(match format {
            Format::Csv => self.csv.clone(),
            Format::Json => serde_json::to_string_pretty(&self.json)? + "\n",
        })
    }
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn target(args: &TargetArgs) -> Result<TargetSpec> {
    Ok(TargetSpec::new(args.guarantee, args.n, args.delta)?)
}

fn r_grid(args: &GridArgs) -> Result<Vec<f64>> {
    if !(args.r_min > 0.0 && args.r_max > args.r_min && args.r_max <= 1.0) {
        bail!(
            "risk grid needs 0 < r-min < r-max <= 1, got [{}, {}]",
            args.r_min,
            args.r_max
        );
    }
    if args.points < 2 {
        bail!("risk grid needs at least 2 points, got {}", args.points);
    }
    let last = (args.points - 1) as f64;
    Ok((0..args.points)
        .map(|i| match i {
            0 => args.r_min,
            i if i == args.points - 1 => args.r_max,
            i => args.r_min + (args.r_max - args.r_min) * (i as f64 / last),
        })
        .collect())
}

pub fn bound(args: &BoundArgs) -> Result<Artifact> {
    let params = CatoniParams::new(args.n, args.delta, args.lambda)?;
    let value = match (&args.prior, &args.risks, &args.masses, &args.posterior) {
        (Some(path), _, _, _) => {
            catoni_min_bound(&DiscreteRiskPrior::from_csv(&read(path)?)?, &params)
        }
        (None, Some(risks), Some(masses), posterior) => {
            let space = FinitePredictorSpace::new(risks.clone(), masses.clone())?;
            match posterior {
                Some(weights) => {
                    catoni_bound(&PosteriorWeights::new(weights.clone())?, &space, &params)?
                }
                None => catoni_min_bound(&pushforward(&space), &params),
            }
        }
        _ => bail!("bound needs --prior or --risks with --masses"),
    };
    Ok(Artifact {
        csv: format!(
            "lambda,bound\n{},{}\n",
            fmt_real(args.lambda),
            fmt_real(value)
        ),
        json: json!({ "lambda": args.lambda, "bound": value }),
    })
}

pub fn gibbs(args: &GibbsArgs) -> Result<Artifact> {
    let space = FinitePredictorSpace::new(args.space.risks.clone(), args.space.masses.clone())?;
    let posterior = gibbs_posterior(&space, args.lambda)?;
    let mut csv = String::from("risk,prior_mass,posterior_mass\n");
    let mut rows = Vec::with_capacity(space.len());
    for ((&r, &m), &w) in space
        .risks()
        .iter()
        .zip(space.prior_masses())
        .zip(posterior.masses())
    {
        csv.push_str(&format!(
            "{},{},{}\n",
            fmt_real(r),
            fmt_real(m),
            fmt_real(w)
        ));
        rows.push(json!({ "risk": r, "prior_mass": m, "posterior_mass": w }));
    }
    Ok(Artifact {
        csv,
        json: Value::Array(rows),
    })
}

pub fn quantile(args: &QuantileArgs) -> Result<Artifact> {
    let target = target(&args.target)?;
    let (lambda, qbar) = match args.lambda {
        Some(lambda) => (lambda, qbar_cat_lambda(args.r, &target, lambda)?),
        None => optimal_requirement(args.r, &target)?,
    };
    Ok(Artifact {
        csv: format!(
            "r,lambda,qbar\n{},{},{}\n",
            fmt_real(args.r),
            fmt_real(lambda),
            fmt_real(qbar)
        ),
        json: json!({ "r": args.r, "lambda": lambda, "qbar": qbar }),
    })
}

pub fn window(args: &TargetArgs) -> Result<Artifact> {
    let w = temperature_window(&target(args)?)?;
    let fields = [
        ("lambda_min", w.lambda_min),
        ("lambda_max", w.lambda_max),
        ("lambda_opt", w.lambda_opt),
        ("lambda_thresh", w.lambda_thresh),
        ("r_thresh", w.r_thresh),
    ];
    let header: Vec<&str> = fields.iter().map(|(k, _)| *k).collect();
    let values: Vec<String> = fields.iter().map(|(_, v)| fmt_real(*v)).collect();
    let json = fields
        .iter()
        .map(|(k, v)| (k.to_string(), json!(v)))
        .collect::<serde_json::Map<_, _>>();
    Ok(Artifact {
        csv: format!("{}\n{}\n", header.join(","), values.join(",")),
        json: Value::Object(json),
    })
}

pub fn theorem3(args: &Theorem3Args) -> Result<Artifact> {
    let point = theorem3_requirement(&target(&args.target)?, args.alpha)?;
    Ok(Artifact {
        csv: format!(
            "r_alpha,q_alpha\n{},{}\n",
            fmt_real(point.r),
            fmt_real(point.qbar)
        ),
        json: json!({ "r_alpha": point.r, "q_alpha": point.qbar }),
    })
}

pub fn testbound(args: &TestboundArgs) -> Result<Artifact> {
    let b = invert_test_bound(args.mean, args.n, args.delta)?;
    Ok(Artifact {
        csv: format!(
            "mean,n,delta,test_bound\n{},{},{},{}\n",
            fmt_real(args.mean),
            args.n,
            fmt_real(args.delta),
            fmt_real(b)
        ),
        json: json!({ "mean": args.mean, "n": args.n, "delta": args.delta, "test_bound": b }),
    })
}

pub fn table2(args: &Table2Args) -> Result<Artifact> {
    let text = match &args.input {
        Some(path) => read(path)?,
        None => TABLE2_FIXTURE.to_string(),
    };
    let records = parse_records(&text)?;
    if records.is_empty() {
        bail!("no records in input");
    }
    let rows = compare_records(&records, args.delta, args.tie_tol)?;
    let json = rows
        .iter()
        .map(|c| {
            json!({
                "name": c.record.name,
                "pac_bayes_bound": c.record.pac_bayes_bound,
                "test_bound": c.test_bound,
                "test_score": c.record.test_score,
                "n_valid": c.record.n_valid,
                "winner": c.winner.to_string(),
            })
        })
        .collect();
    Ok(Artifact {
        csv: comparisons_to_csv(&rows),
        json: Value::Array(json),
    })
}

fn curve_json(curve: &RequirementCurve) -> Value {
    let row = |r: &CurveRow<f64>| {
        json!({
            "r": r.r,
            "per_lambda": r.per_lambda,
            "temperature_free": r.temperature_free,
        })
    };
    json!({
        "lambdas": curve.lambdas,
        "rows": curve.rows.iter().map(row).collect::<Vec<_>>(),
    })
}

pub fn figure1(args: &CurveArgs) -> Result<Artifact> {
    let target = target(&args.target)?;
    let lambda_opt = temperature_window(&target)?.lambda_opt;
    let curve = sweep_requirement_curve(&target, &r_grid(&args.grid)?, Some(&[lambda_opt]))?;
    Ok(Artifact {
        csv: curve.to_csv(),
        json: curve_json(&curve),
    })
}

pub fn figure2(args: &Figure2Args) -> Result<Artifact> {
    let target = target(&args.target)?;
    let curve = sweep_requirement_curve(&target, &r_grid(&args.grid)?, args.lambdas.as_deref())?;
    Ok(Artifact {
        csv: curve.to_csv(),
        json: curve_json(&curve),
    })
}

pub fn figure3(args: &Figure3Args) -> Result<Artifact> {
    let rows = sweep_cluster_masses(&args.k, &args.p, args.r)?;
    let json = rows
        .iter()
        .map(|row| {
            json!({
                "k": row.k,
                "p": row.p,
                "log10_exact": row.log_exact.log10(),
                "log10_bound": row.log_bound / std::f64::consts::LN_10,
            })
        })
        .collect();
    Ok(Artifact {
        csv: cluster_rows_to_csv(&rows),
        json: Value::Array(json),
    })
}

pub fn coverage(args: &CoverageArgs) -> Result<Artifact> {
    let report = match &args.scenario {
        Some(path) => Scenario::from_fixture(&read(path)?)?.run()?,
        None => {
            let (Some(risks), Some(masses)) = (&args.risks, &args.masses) else {
                bail!("coverage needs --scenario or --risks with --masses");
            };
            let world = SyntheticWorld::new(risks.clone(), masses.clone())?;
            let required =
                |name: &str| anyhow::anyhow!("coverage without --scenario needs --{name}");
            run_coverage(
                &world,
                args.n.ok_or_else(|| required("n"))?,
                args.lambda.ok_or_else(|| required("lambda"))?,
                args.delta.unwrap_or(0.035),
                args.trials.ok_or_else(|| required("trials"))?,
                args.seed.unwrap_or(0),
            )?
        }
    };
    Ok(Artifact {
        csv: format!(
            "trials,violations,coverage,wilson_low\n{},{},{},{}\n",
            report.trials,
            report.violations,
            fmt_real(report.coverage),
            fmt_real(report.wilson_low)
        ),
        json: serde_json::to_value(report)?,
    })
}
