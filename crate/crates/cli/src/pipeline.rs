//! The four subcommands. Each writes its files into the output directory and
//! returns the report it wrote.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use waveguide_core::certificates::{
    certify_thm2, certify_thm3, certify_thm5_broken, rayleigh_quotient_on, CertificateContext, CertificateResult,
    CERT_SIGMA,
};
use waveguide_core::geometry::{CrossSection, ReferenceProfile};
use waveguide_core::potential::{
    classify, compute_broken_constants, compute_profile, integral_v, uniform_grid, BrokenConstants, ClassifierInput,
    TheoremClassification, Tolerances, Verdict,
};
use waveguide_core::spectrum2d::{
    assemble_form, find_bound_states, EigenResult, SearchSchedule, StripGrid, DEFAULT_TOL,
};
use waveguide_core::transverse::{
    band_sweep, essential_threshold, transverse_eigs, TransverseOperatorSpec, TransverseScheme,
};

use crate::golden::{self, Golden, GoldenCheck};
use crate::scenario::{Resolution, Scenario};
use crate::{CliError, ExitStatus};

/// Allowed `|lambda_n(p) - lambda_n(0) - p^2/kappa|` relative to `1 + lambda_n(0)`.
pub const GAUGE_REL_TOL: f64 = 1e-4;
/// Slack in the check `rayleigh_quotient >= lambda_1`.
pub const ORDERING_TOL: f64 = 1e-9;
/// Momenta of the band CSV.
pub const BAND_P: (f64, f64, usize) = (-3.0, 3.0, 25);

pub struct Context {
    pub scenario: Scenario,
    pub out_dir: PathBuf,
    pub golden: Golden,
    pub export_matrix: bool,
}

impl Context {
    pub fn new(scenario: Scenario, out_dir: Option<PathBuf>, golden: Golden) -> Self {
        let out_dir = out_dir.unwrap_or_else(|| scenario.outputs.clone());
        Context {
            scenario,
            out_dir,
            golden,
            export_matrix: false,
        }
    }

    fn res(&self) -> &Resolution {
        &self.scenario.resolution
    }

    fn meta(&self) -> Meta {
        let t = Tolerances::default();
        Meta {
            scenario: self.scenario.name.clone(),
            scenario_hash: self.scenario.hash(),
            golden_version: self.golden.version.clone(),
            resolution: self.res().clone(),
            tolerances: ToleranceRecord {
                thm2_sigma: t.thm2_sigma,
                thm3_int_sigma: t.thm3_int_sigma,
                thm3_b_sigma: t.thm3_b_sigma,
                thm5_sigma: t.thm5_sigma,
                certificate_sigma: CERT_SIGMA,
                eigensolver_residual: DEFAULT_TOL,
                confirmation_ratio: 0.9,
                gauge_relative: GAUGE_REL_TOL,
                ordering: ORDERING_TOL,
                golden_relative: golden::REL_TOL,
                golden_absolute: golden::ABS_TOL,
            },
        }
    }

    fn write(&self, name: &str, text: &str) -> Result<(), CliError> {
        fs::create_dir_all(&self.out_dir).map_err(|e| CliError::Io(format!("{}: {e}", self.out_dir.display())))?;
        let path = self.out_dir.join(name);
        fs::write(&path, text).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
    }

    fn write_json<T: Serialize>(&self, name: &str, value: &T) -> Result<(), CliError> {
        let mut text = serde_json::to_string_pretty(value).expect("report serializes");
        text.push('\n');
        self.write(name, &text)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ToleranceRecord {
    pub thm2_sigma: f64,
    pub thm3_int_sigma: f64,
    pub thm3_b_sigma: f64,
    pub thm5_sigma: f64,
    pub certificate_sigma: f64,
    pub eigensolver_residual: f64,
    pub confirmation_ratio: f64,
    pub gauge_relative: f64,
    pub ordering: f64,
    pub golden_relative: f64,
    pub golden_absolute: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Meta {
    pub scenario: String,
    pub scenario_hash: String,
    pub golden_version: String,
    pub resolution: Resolution,
    pub tolerances: ToleranceRecord,
}

/// Shared by all reports.
pub trait Report {
    fn warnings(&self) -> &[String];
    fn golden_check(&self) -> &[GoldenCheck];
    /// Values recorded in the golden file.
    fn golden_values(&self) -> Vec<(&'static str, f64)>;

    fn status(&self) -> ExitStatus {
        if self.golden_check().iter().any(|g| !g.pass) {
            ExitStatus::Error
        } else if !self.warnings().is_empty() {
            ExitStatus::Warnings
        } else {
            ExitStatus::Success
        }
    }
}

fn num(v: f64) -> String {
    format!("{v:e}")
}

fn csv(header: &[String], rows: &[Vec<f64>]) -> String {
    let mut s = header.join(",");
    s.push('\n');
    for r in rows {
        let cells: Vec<String> = r.iter().map(|v| num(*v)).collect();
        s.push_str(&cells.join(","));
        s.push('\n');
    }
    s
}

fn opt_f64(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

fn golden_warnings(checks: &[GoldenCheck], warnings: &mut Vec<String>) {
    for c in checks.iter().filter(|c| !c.pass) {
        warnings.push(format!(
            "golden mismatch for {}: expected {:e}, got {:e}",
            c.quantity, c.expected, c.actual
        ));
    }
}

// ---------------------------------------------------------------- threshold

#[derive(Debug, Clone, Serialize)]
pub struct ThresholdReport {
    pub meta: Meta,
    pub beta1: f64,
    pub beta2: f64,
    pub kappa: f64,
    /// Richardson-extrapolated threshold.
    #[serde(rename = "E1")]
    pub e1: f64,
    pub error_estimate: f64,
    #[serde(rename = "E1_fine")]
    pub e1_fine: f64,
    #[serde(rename = "E1_coarse")]
    pub e1_coarse: f64,
    /// Threshold of the Galerkin discretization used by the 2D solver at `n_t`.
    #[serde(rename = "E1_discrete")]
    pub e1_discrete: f64,
    pub spectral_gap: f64,
    pub transverse_eigenvalues: Vec<f64>,
    pub band_csv: String,
    pub gauge_max_shift: f64,
    pub gauge_max_relative: f64,
    pub gauge_pass: bool,
    pub golden_check: Vec<GoldenCheck>,
    pub warnings: Vec<String>,
}

impl Report for ThresholdReport {
    fn warnings(&self) -> &[String] {
        &self.warnings
    }
    fn golden_check(&self) -> &[GoldenCheck] {
        &self.golden_check
    }
    fn golden_values(&self) -> Vec<(&'static str, f64)> {
        vec![
            ("E1", self.e1),
            ("E1_error", self.error_estimate),
            ("E1_discrete", self.e1_discrete),
            ("E2", self.transverse_eigenvalues.get(1).copied().unwrap_or(f64::NAN)),
        ]
    }
}

fn setup(ctx: &Context) -> Result<(CrossSection, ReferenceProfile), CliError> {
    Ok((ctx.scenario.cross_section()?, ctx.scenario.profile()?))
}

pub fn run_threshold(ctx: &Context) -> Result<ThresholdReport, CliError> {
    let (cs, profile) = setup(ctx)?;
    let report = threshold_report(ctx, &cs, &profile)?;
    ctx.write_json("threshold.json", &report)?;
    Ok(report)
}

fn threshold_report(ctx: &Context, cs: &CrossSection, profile: &ReferenceProfile) -> Result<ThresholdReport, CliError> {
    let res = ctx.res();
    let (b1, b2) = profile.limits();
    let kappa = 1.0 + b1 * b1 + b2 * b2;
    let thr = essential_threshold(cs, b1, b2, res.transverse_n)?;
    let k = res.k;
    let head = transverse_eigs(&TransverseOperatorSpec::new(cs, b1, b2, res.transverse_n), k)?;
    let discrete = transverse_eigs(
        &TransverseOperatorSpec::new(cs, b1, b2, res.n_t).with_scheme(TransverseScheme::Galerkin),
        1,
    )?
    .e1();

    let (p0, p1, np) = BAND_P;
    let ps: Vec<f64> = (0..np).map(|i| p0 + (p1 - p0) * i as f64 / (np - 1) as f64).collect();
    let bands = band_sweep(&TransverseOperatorSpec::new(cs, b1, b2, res.band_n), &ps, k)?;
    let zero = bands.iter().find(|b| b.p == 0.0).expect("p = 0 is on the band grid");
    let mut header: Vec<String> = vec!["p".into()];
    header.extend((1..=k).map(|n| format!("lambda_{n}")));
    header.extend((1..=k).map(|n| format!("shift_{n}")));
    let mut rows = Vec::with_capacity(bands.len());
    let (mut max_shift, mut max_rel) = (0.0f64, 0.0f64);
    for b in &bands {
        let mut row = vec![b.p];
        row.extend(&b.eigenvalues);
        for (l, l0) in b.eigenvalues.iter().zip(&zero.eigenvalues) {
            let shift = l - l0 - b.p * b.p / kappa;
            max_shift = max_shift.max(shift.abs());
            max_rel = max_rel.max(shift.abs() / (1.0 + l0.abs()));
            row.push(shift);
        }
        rows.push(row);
    }
    ctx.write("band.csv", &csv(&header, &rows))?;

    let mut warnings = Vec::new();
    let gauge_pass = max_rel <= GAUGE_REL_TOL;
    if !gauge_pass {
        warnings.push(format!("band shifts deviate from p^2/kappa by {max_rel:.3e} relative"));
    }
    let mut report = ThresholdReport {
        meta: ctx.meta(),
        beta1: b1,
        beta2: b2,
        kappa,
        e1: thr.e1,
        error_estimate: thr.error_estimate,
        e1_fine: thr.e1_fine,
        e1_coarse: thr.e1_coarse,
        e1_discrete: discrete,
        spectral_gap: head.spectral_gap,
        transverse_eigenvalues: head.eigenvalues,
        band_csv: "band.csv".into(),
        gauge_max_shift: max_shift,
        gauge_max_relative: max_rel,
        gauge_pass,
        golden_check: Vec::new(),
        warnings,
    };
    report.golden_check = ctx.golden.check(&ctx.scenario.name, &report.golden_values());
    golden_warnings(&report.golden_check, &mut report.warnings);
    Ok(report)
}

// ---------------------------------------------------------------- potential

#[derive(Debug, Clone, Serialize)]
pub struct BrokenRecord {
    pub beta: f64,
    #[serde(rename = "A")]
    pub a_const: f64,
    #[serde(rename = "B")]
    pub b_const: f64,
    #[serde(rename = "B_fine")]
    pub b_fine: f64,
    #[serde(rename = "B_coarse")]
    pub b_coarse: f64,
    pub quadrature_error: f64,
    pub symmetry: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct PotentialReport {
    pub meta: Meta,
    pub profile_kind: String,
    pub verdict: String,
    #[serde(rename = "int_V")]
    pub int_v: Option<f64>,
    #[serde(rename = "int_V_error")]
    pub int_v_error: Option<f64>,
    #[serde(rename = "B_variation")]
    pub b_variation: f64,
    pub details: String,
    #[serde(rename = "E_const")]
    pub e_const: Option<f64>,
    pub kappa: f64,
    /// `E1` of the transverse solve behind the potential.
    #[serde(rename = "E1")]
    pub e1: f64,
    pub quadrature_error: f64,
    #[serde(rename = "max_abs_V")]
    pub max_abs_v: Option<f64>,
    pub broken: Option<BrokenRecord>,
    pub csv: String,
    pub golden_check: Vec<GoldenCheck>,
    pub warnings: Vec<String>,
}

impl Report for PotentialReport {
    fn warnings(&self) -> &[String] {
        &self.warnings
    }
    fn golden_check(&self) -> &[GoldenCheck] {
        &self.golden_check
    }
    fn golden_values(&self) -> Vec<(&'static str, f64)> {
        let mut v = Vec::new();
        if let Some(x) = self.int_v {
            v.push(("int_V", x));
        }
        if let Some(x) = self.e_const {
            v.push(("E_const", x));
        }
        if let Some(b) = &self.broken {
            v.push(("A_const", b.a_const));
            v.push(("B_const", b.b_const));
        } else {
            v.push(("B_variation", self.b_variation));
        }
        v
    }
}

/// What later stages need from the potential step.
pub struct PotentialData {
    pub classification: TheoremClassification,
    pub broken: Option<BrokenConstants>,
    /// `max B - min B` above `thm3_b_sigma` times its error.
    pub b_nonconstant: bool,
}

pub fn run_potential(ctx: &Context) -> Result<PotentialReport, CliError> {
    let (cs, profile) = setup(ctx)?;
    let (report, _) = potential_report(ctx, &cs, &profile)?;
    ctx.write_json("verdict.json", &report)?;
    Ok(report)
}

fn potential_report(
    ctx: &Context,
    cs: &CrossSection,
    profile: &ReferenceProfile,
) -> Result<(PotentialReport, PotentialData), CliError> {
    let res = ctx.res();
    let tol = Tolerances::default();
    let mut warnings = Vec::new();
    let (b1, b2) = profile.limits();
    let kappa = 1.0 + b1 * b1 + b2 * b2;
    let (report, data) = if let ReferenceProfile::Broken { beta } = profile {
        let bc = compute_broken_constants(cs, *beta, res.potential_n_t)?;
        let cls = classify(ClassifierInput::Broken(&bc), &tol);
        let header: Vec<String> = ["beta", "A", "B", "quadrature_error", "E1"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        ctx.write(
            "broken_constants.csv",
            &csv(
                &header,
                &[vec![bc.beta, bc.a_const, bc.b_const, bc.quadrature_error, bc.e1]],
            ),
        )?;
        let report = PotentialReport {
            meta: ctx.meta(),
            profile_kind: "broken".into(),
            verdict: cls.verdict.as_str().into(),
            int_v: None,
            int_v_error: None,
            b_variation: cls.b_variation,
            details: cls.details.clone(),
            e_const: None,
            kappa,
            e1: bc.e1,
            quadrature_error: bc.quadrature_error,
            max_abs_v: None,
            broken: Some(BrokenRecord {
                beta: bc.beta,
                a_const: bc.a_const,
                b_const: bc.b_const,
                b_fine: bc.b_fine,
                b_coarse: bc.b_coarse,
                quadrature_error: bc.quadrature_error,
                symmetry: bc.symmetry.map(str::to_string),
            }),
            csv: "broken_constants.csv".into(),
            golden_check: Vec::new(),
            warnings: Vec::new(),
        };
        (
            report,
            PotentialData {
                classification: cls,
                broken: Some(bc),
                b_nonconstant: false,
            },
        )
    } else {
        let grid = uniform_grid(-res.x_extent, res.x_extent, res.x_step)?;
        let epp = compute_profile(cs, profile, &grid, res.potential_n_t)?;
        let cls = classify(ClassifierInput::Smooth(&epp), &tol);
        let int_v = integral_v(&epp).ok();
        let header: Vec<String> = [
            "x", "A", "B", "C", "D", "V", "E_const", "beta1", "beta2", "int_V", "verdict",
        ]
        .iter()
        .map(|s| s.to_string())
        .collect();
        let mut text = header.join(",");
        text.push('\n');
        let iv = opt_f64(int_v.map(|p| p.0));
        for i in 0..grid.len() {
            let _ = writeln!(
                text,
                "{},{},{},{},{},{},{},{},{},{},{}",
                num(grid[i]),
                num(epp.a[i]),
                num(epp.b[i]),
                num(epp.c[i]),
                num(epp.d[i]),
                num(epp.v[i]),
                num(epp.e_const),
                num(b1),
                num(b2),
                iv,
                cls.verdict.as_str()
            );
        }
        ctx.write("potential.csv", &text)?;
        let max_abs_v = epp.v.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let b_nonconstant = epp.b_variation() > tol.thm3_b_sigma * epp.quadrature_error;
        let report = PotentialReport {
            meta: ctx.meta(),
            profile_kind: "smooth".into(),
            verdict: cls.verdict.as_str().into(),
            int_v: cls.int_v,
            int_v_error: cls.int_v_error,
            b_variation: cls.b_variation,
            details: cls.details.clone(),
            e_const: Some(epp.e_const),
            kappa,
            e1: epp.e1,
            quadrature_error: epp.quadrature_error,
            max_abs_v: Some(max_abs_v),
            broken: None,
            csv: "potential.csv".into(),
            golden_check: Vec::new(),
            warnings: Vec::new(),
        };
        (
            report,
            PotentialData {
                classification: cls,
                broken: None,
                b_nonconstant,
            },
        )
    };
    let mut report = report;
    if data.classification.verdict == Verdict::Inconclusive {
        warnings.push(format!("classification inconclusive: {}", data.classification.details));
    }
    report.warnings = warnings;
    report.golden_check = ctx.golden.check(&ctx.scenario.name, &report.golden_values());
    golden_warnings(&report.golden_check, &mut report.warnings);
    Ok((report, data))
}

// ------------------------------------------------------------- bound states

#[derive(Debug, Clone, Serialize)]
pub struct TrendRecord {
    pub n: f64,
    pub q_value: f64,
    pub error_bar: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct CertificateRecord {
    pub theorem: String,
    /// `certified`, `not certified` or `not applicable`.
    pub verdict: String,
    pub n: Option<f64>,
    pub epsilon: Option<f64>,
    pub q_value: Option<f64>,
    pub error_bar: Option<f64>,
    pub certified: bool,
    pub rayleigh_quotient: Option<f64>,
    pub threshold: Option<f64>,
    pub cross_term: Option<f64>,
    pub cross_term_limit: Option<f64>,
    pub q_phi: Option<f64>,
    pub trend: Vec<TrendRecord>,
    pub epsilon_scan: Vec<(f64, f64)>,
    pub error: Option<String>,
}

impl CertificateRecord {
    fn from_result(r: &CertificateResult) -> Self {
        CertificateRecord {
            theorem: r.theorem.into(),
            verdict: if r.certified { "certified" } else { "not certified" }.into(),
            n: Some(r.n),
            epsilon: Some(r.epsilon),
            q_value: Some(r.q_value),
            error_bar: Some(r.error_bar),
            certified: r.certified,
            rayleigh_quotient: Some(r.rayleigh_quotient),
            threshold: Some(r.threshold),
            cross_term: r.cross_term,
            cross_term_limit: r.cross_term_limit,
            q_phi: r.q_phi,
            trend: r
                .trend
                .iter()
                .map(|t| TrendRecord {
                    n: t.n,
                    q_value: t.q_value,
                    error_bar: t.error_bar,
                })
                .collect(),
            epsilon_scan: r.epsilon_scan.clone(),
            error: None,
        }
    }

    fn failed(theorem: &str, e: &waveguide_core::Error) -> Self {
        CertificateRecord {
            theorem: theorem.into(),
            verdict: "not applicable".into(),
            n: None,
            epsilon: None,
            q_value: None,
            error_bar: None,
            certified: false,
            rayleigh_quotient: None,
            threshold: None,
            cross_term: None,
            cross_term_limit: None,
            q_phi: None,
            trend: Vec::new(),
            epsilon_scan: Vec::new(),
            error: Some(e.to_string()),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct BoundStateRecord {
    pub index: usize,
    pub lambda: f64,
    pub gap: f64,
    pub margin: f64,
    pub status: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConvergenceRecord {
    #[serde(rename = "L")]
    pub half_length: f64,
    pub n_x: usize,
    pub n_t: usize,
    pub threshold: f64,
    pub eigenvalues: Vec<f64>,
    pub residual_norms: Vec<f64>,
}

/// One line of the certificate-versus-eigenvalue table. The trial is
/// re-evaluated on the finest 2D grid so both numbers come from one matrix.
#[derive(Debug, Clone, Serialize)]
pub struct ComparisonRow {
    pub certificate: String,
    pub n: Option<f64>,
    pub epsilon: Option<f64>,
    pub rayleigh_quotient: Option<f64>,
    pub lowest_eigenvalue: f64,
    pub threshold_2d: f64,
    /// `rayleigh_quotient >= lowest_eigenvalue - ORDERING_TOL`.
    pub ordering_holds: Option<bool>,
}

#[derive(Debug, Clone, Serialize)]
pub struct BoundStatesReport {
    pub meta: Meta,
    /// Richardson-extrapolated threshold.
    #[serde(rename = "E1")]
    pub e1: f64,
    pub verdict: String,
    pub eigenvalues: Vec<f64>,
    pub residual_norms: Vec<f64>,
    pub below_threshold: Vec<BoundStateRecord>,
    pub confirmed_count: usize,
    pub convergence_record: Vec<ConvergenceRecord>,
    pub certificates: Vec<CertificateRecord>,
    pub comparison: Vec<ComparisonRow>,
    pub golden_check: Vec<GoldenCheck>,
    pub warnings: Vec<String>,
}

impl Report for BoundStatesReport {
    fn warnings(&self) -> &[String] {
        &self.warnings
    }
    fn golden_check(&self) -> &[GoldenCheck] {
        &self.golden_check
    }
    fn golden_values(&self) -> Vec<(&'static str, f64)> {
        let mut v = vec![
            ("lambda_1", self.eigenvalues[0]),
            ("confirmed_count", self.confirmed_count as f64),
        ];
        for c in &self.certificates {
            if let Some(q) = c.q_value {
                v.push((
                    match c.theorem.as_str() {
                        "Thm2" => "thm2_q",
                        "Thm3" => "thm3_q",
                        _ => "thm5_q",
                    },
                    q,
                ));
            }
        }
        v
    }
}

pub fn run_bound_states(ctx: &Context) -> Result<BoundStatesReport, CliError> {
    let (cs, profile) = setup(ctx)?;
    let (_, data) = potential_report(ctx, &cs, &profile)?;
    let (b1, b2) = profile.limits();
    let e1 = essential_threshold(&cs, b1, b2, ctx.res().transverse_n)?.e1;
    let report = bound_states_report(ctx, &cs, &profile, &data, e1)?;
    ctx.write_json("bound_states.json", &report)?;
    Ok(report)
}

fn certificates<'a>(
    ctx: &Context,
    cs: &'a CrossSection,
    profile: &'a ReferenceProfile,
    data: &PotentialData,
) -> Result<(Vec<CertificateRecord>, CertificateContext<'a>), CliError> {
    let res = ctx.res();
    let cctx = CertificateContext::new(cs, profile, res.n_t, res.cert_hx)?;
    let mut out = Vec::new();
    match &data.broken {
        Some(bc) => {
            // the constants must come from the same discretization as the form
            let bc_cert = compute_broken_constants(cs, bc.beta, res.n_t)?;
            out.push(match certify_thm5_broken(&cctx, res.thm3_n, &bc_cert) {
                Ok(r) => CertificateRecord::from_result(&r),
                Err(e @ waveguide_core::Error::Precondition(_)) => CertificateRecord::failed("Thm5", &e),
                Err(e) => return Err(e.into()),
            });
        }
        None => {
            out.push(CertificateRecord::from_result(&certify_thm2(&cctx, &res.n_schedule)?));
            if data.b_nonconstant {
                out.push(CertificateRecord::from_result(&certify_thm3(&cctx, res.thm3_n, &[])?));
            }
        }
    }
    Ok((out, cctx))
}

fn bound_states_report(
    ctx: &Context,
    cs: &CrossSection,
    profile: &ReferenceProfile,
    data: &PotentialData,
    e1: f64,
) -> Result<BoundStatesReport, CliError> {
    let res = ctx.res();
    let search = SearchSchedule {
        l_list: res.l_list.clone(),
        grid_list: vec![res.coarse_grid(), (res.n_x, res.n_t)],
    };
    let er: EigenResult = find_bound_states(cs, profile, e1, &search, res.k)?;
    if ctx.export_matrix {
        let l = *res.l_list.last().unwrap();
        let grid = StripGrid::new(l, res.n_x, res.n_t)?;
        export_matrix(&ctx.out_dir.join("matrix.coo"), cs, profile, &grid)?;
    }
    let (certs, cctx) = certificates(ctx, cs, profile, data)?;
    let last = er.convergence_record.last().expect("nonempty record");
    let lambda1 = er.eigenvalues[0];
    let grid = StripGrid::new(last.half_length, last.n_x, last.n_t)?;
    // largest n whose trial support fits inside the strip
    let fits = |n: f64| 2.0 * n + 1.0 < grid.half_length;
    let mut comparison = Vec::with_capacity(certs.len());
    for c in &certs {
        let n = match c.theorem.as_str() {
            "Thm2" => res
                .n_schedule
                .iter()
                .copied()
                .filter(|n| fits(*n))
                .fold(None, |m: Option<f64>, n| Some(m.map_or(n, |m| m.max(n)))),
            _ => c.n.filter(|n| fits(*n)),
        };
        let eps = if c.theorem == "Thm2" { Some(0.0) } else { c.epsilon };
        let rq = match (n, eps) {
            (Some(n), Some(e)) => Some(rayleigh_quotient_on(&cctx, grid, n, e)?),
            _ => None,
        };
        comparison.push(ComparisonRow {
            certificate: c.theorem.clone(),
            n,
            epsilon: eps.filter(|_| n.is_some()),
            rayleigh_quotient: rq,
            lowest_eigenvalue: lambda1,
            threshold_2d: last.threshold,
            ordering_holds: rq.map(|rq| rq >= lambda1 - ORDERING_TOL),
        });
    }

    let below: Vec<BoundStateRecord> = er
        .below_threshold
        .iter()
        .map(|b| BoundStateRecord {
            index: b.index,
            lambda: b.lambda,
            gap: b.gap,
            margin: b.margin,
            status: if b.confirmed { "CONFIRMED" } else { "CANDIDATE" }.into(),
        })
        .collect();
    let confirmed_count = er.below_threshold.iter().filter(|b| b.confirmed).count();

    let k = res.k;
    let mut header: Vec<String> = ["L", "n_x", "n_t", "threshold"].iter().map(|s| s.to_string()).collect();
    header.extend((1..=k).map(|n| format!("lambda_{n}")));
    let rows: Vec<Vec<f64>> = er
        .convergence_record
        .iter()
        .map(|r| {
            let mut row = vec![r.half_length, r.n_x as f64, r.n_t as f64, r.threshold];
            row.extend(&r.eigenvalues);
            row
        })
        .collect();
    ctx.write("convergence.csv", &csv(&header, &rows))?;

    let mut table = String::from(
        "index,lambda,gap,margin,status,certificate,trial_n,rayleigh_quotient,lowest_eigenvalue,ordering_holds\n",
    );
    let n_rows = below.len().max(comparison.len()).max(1);
    for i in 0..n_rows {
        let b = below.get(i);
        let c = comparison.get(i);
        let _ = writeln!(
            table,
            "{},{},{},{},{},{},{},{},{},{}",
            b.map(|b| b.index.to_string()).unwrap_or_default(),
            b.map(|b| num(b.lambda)).unwrap_or_default(),
            b.map(|b| num(b.gap)).unwrap_or_default(),
            b.map(|b| num(b.margin)).unwrap_or_default(),
            b.map(|b| b.status.clone()).unwrap_or_default(),
            c.map(|c| c.certificate.clone()).unwrap_or_default(),
            c.map(|c| opt_f64(c.n)).unwrap_or_default(),
            c.map(|c| opt_f64(c.rayleigh_quotient)).unwrap_or_default(),
            c.map(|c| num(c.lowest_eigenvalue)).unwrap_or_default(),
            c.and_then(|c| c.ordering_holds)
                .map(|o| o.to_string())
                .unwrap_or_default(),
        );
    }
    ctx.write("bound_states.csv", &table)?;

    let mut warnings = Vec::new();
    if data.classification.verdict == Verdict::Inconclusive {
        warnings.push(format!("classification inconclusive: {}", data.classification.details));
    }
    for c in &certs {
        if let Some(e) = &c.error {
            warnings.push(format!("{} certificate not applicable: {e}", c.theorem));
        }
    }
    for row in comparison.iter().filter(|r| r.ordering_holds == Some(false)) {
        warnings.push(format!(
            "{} Rayleigh quotient {:e} is below the lowest eigenvalue {:e}",
            row.certificate,
            row.rayleigh_quotient.unwrap_or(f64::NAN),
            row.lowest_eigenvalue
        ));
    }
    let mut report = BoundStatesReport {
        meta: ctx.meta(),
        e1,
        verdict: data.classification.verdict.as_str().into(),
        eigenvalues: er.eigenvalues.clone(),
        residual_norms: er.residual_norms.clone(),
        below_threshold: below,
        confirmed_count,
        convergence_record: er
            .convergence_record
            .iter()
            .map(|r| ConvergenceRecord {
                half_length: r.half_length,
                n_x: r.n_x,
                n_t: r.n_t,
                threshold: r.threshold,
                eigenvalues: r.eigenvalues.clone(),
                residual_norms: r.residual_norms.clone(),
            })
            .collect(),
        certificates: certs,
        comparison,
        golden_check: Vec::new(),
        warnings,
    };
    report.golden_check = ctx.golden.check(&ctx.scenario.name, &report.golden_values());
    golden_warnings(&report.golden_check, &mut report.warnings);
    Ok(report)
}

/// Coordinate list `row col value`, 0-based, full symmetric pattern.
fn export_matrix(path: &Path, cs: &CrossSection, profile: &ReferenceProfile, grid: &StripGrid) -> Result<(), CliError> {
    let h = assemble_form(cs, profile, grid)?;
    let mut s = String::with_capacity(h.nnz() * 40);
    let _ = writeln!(
        s,
        "% n_x={} n_t={} L={} dim={} nnz={}",
        grid.n_x,
        grid.n_t,
        num(grid.half_length),
        h.dim(),
        h.nnz()
    );
    for (i, j, v) in h.entries() {
        let _ = writeln!(s, "{i} {j} {}", num(v));
    }
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    fs::write(path, s)?;
    Ok(())
}

// ---------------------------------------------------------------------- all

#[derive(Debug, Clone, Serialize)]
pub struct AllReport {
    pub meta: Meta,
    pub threshold: ThresholdReport,
    pub potential: PotentialReport,
    pub bound_states: BoundStatesReport,
}

impl AllReport {
    pub fn status(&self) -> ExitStatus {
        let s = [
            self.threshold.status(),
            self.potential.status(),
            self.bound_states.status(),
        ];
        if s.contains(&ExitStatus::Error) {
            ExitStatus::Error
        } else if s.contains(&ExitStatus::Warnings) {
            ExitStatus::Warnings
        } else {
            ExitStatus::Success
        }
    }

    pub fn golden_values(&self) -> Vec<(&'static str, f64)> {
        let mut v = self.threshold.golden_values();
        v.extend(self.potential.golden_values());
        v.extend(self.bound_states.golden_values());
        v
    }
}

pub fn run_all(ctx: &Context) -> Result<AllReport, CliError> {
    let (cs, profile) = setup(ctx)?;
    let threshold = threshold_report(ctx, &cs, &profile)?;
    ctx.write_json("threshold.json", &threshold)?;
    let (potential, data) = potential_report(ctx, &cs, &profile)?;
    ctx.write_json("verdict.json", &potential)?;
    let bound_states = bound_states_report(ctx, &cs, &profile, &data, threshold.e1)?;
    ctx.write_json("bound_states.json", &bound_states)?;
    let report = AllReport {
        meta: ctx.meta(),
        threshold,
        potential,
        bound_states,
    };
    ctx.write_json("summary.json", &report)?;
    Ok(report)
}
