//! End-to-end orchestration: validate, build connections, classify,
//! recognize special classes, attach the QR-algebra section, and collect
//! every identity residual into a deterministic report.


use riemgeo::analysis;
use riemgeo::catalog::CatalogEntry;
use riemgeo::classify::{self, TaxonomyId};
use riemgeo::error::GeoError;
use riemgeo::lie::{self, Connection, FrameModel};
use riemgeo::qr;
use riemgeo::selftest::{self, StructuredGeometry};
use riemgeo::structures::StructureTensor;
use riemgeo::tensor::Tensor3;
use riemgeo::tol;

use crate::geometry::GeometryFile;
use crate::jsonout::{self, Json};

#[derive(Debug, Clone, PartialEq)]
pub enum PipelineStatus {
    Ok,
    /// Input failed a validator (exit 2).
    ValidationFailure(String),
    /// An internal identity tripwire fired (exit 3).
    Tripwire(String),
}

pub struct PipelineOutput {
    pub report: Json,
    pub status: PipelineStatus,
}

fn classify_error(e: &GeoError) -> PipelineStatus {
    match e {
        GeoError::InternalInconsistency(_)
        | GeoError::TaxonomyConstruction { .. }
        | GeoError::DecompositionFailure
        | GeoError::NonConvergence { .. } => PipelineStatus::Tripwire(e.to_string()),
        _ => PipelineStatus::ValidationFailure(e.to_string()),
    }
}

fn membership_json(prefix: &str, rep: &classify::ClassReport) -> Json {
    let mut o = Json::obj();
    o.insert("taxonomy".into(), Json::Str(rep.taxonomy.as_str().into()));
    let mut norms = Json::obj();
    for (i, v) in &rep.component_norms {
        norms.insert(format!("{prefix}{i}"), jsonout::num(*v));
    }
    o.insert("component_norms".into(), Json::Obj(norms));
    o.insert(
        "membership".into(),
        Json::Arr(rep.membership.iter().map(|i| Json::Str(format!("{prefix}{i}"))).collect()),
    );
    o.insert("strict".into(), Json::Bool(rep.strict));
    o.insert(
        "named_classes".into(),
        Json::Arr(rep.named_labels.iter().map(|l| Json::Str(l.clone())).collect()),
    );
    o.insert("ambient_residual".into(), jsonout::num(rep.ambient_residual));
    o.insert("h_norm".into(), jsonout::num(rep.h_norm));
    o.insert("tol_rel".into(), jsonout::num(rep.tol_rel));
    Json::Obj(o)
}

fn residuals_json(r: &riemgeo::selftest::IdentityResiduals) -> Json {
    let mut o = Json::obj();
    o.insert("lie_antisymmetry".into(), jsonout::num(r.lie_antisymmetry));
    o.insert("lie_jacobi".into(), jsonout::num(r.lie_jacobi));
    o.insert("levi_civita_torsion".into(), jsonout::num(r.levi_civita_torsion));
    o.insert("levi_civita_metric".into(), jsonout::num(r.levi_civita_metric));
    o.insert("canonical_metric".into(), jsonout::num(r.bar_metric));
    o.insert("canonical_structure_parallel".into(), jsonout::num(r.bar_structure));
    o.insert("h_metric_skew".into(), jsonout::num(r.h_skew));
    o.insert("family_symmetry".into(), jsonout::num(r.family_symmetry));
    o.insert("torsion_dual".into(), jsonout::num(r.torsion_dual));
    o.insert("curvature_relation".into(), jsonout::num(r.curvature_relation));
    o.insert("bianchi".into(), jsonout::num(r.bianchi));
    Json::Obj(o)
}

fn qr_section(h: &Tensor3, model: &FrameModel) -> Json {
    let mut o = Json::obj();
    match qr::from_h(h, model.frame()) {
        Err(GeoError::NotNearlyParticular { sym_norm }) => {
            o.insert("applicable".into(), Json::Bool(false));
            o.insert("h_symmetric_part_norm".into(), jsonout::num(sym_norm));
        }
        Err(e) => {
            o.insert("applicable".into(), Json::Bool(false));
            o.insert("error".into(), Json::Str(e.to_string()));
        }
        Ok(alg) => {
            o.insert("applicable".into(), Json::Bool(true));
            let (anti, assoc) = alg.axiom_residuals();
            o.insert("axiom_anticommutativity".into(), jsonout::num(anti));
            o.insert("axiom_form_associativity".into(), jsonout::num(assoc));
            match qr::ideal_decompose(&alg) {
                Ok(d) => {
                    let mut eigs: Vec<f64> = d.eigen.spaces.iter().map(|(l, _)| *l).collect();
                    eigs.sort_by(|a, b| a.partial_cmp(b).unwrap());
                    o.insert(
                        "fundamental_eigenvalues".into(),
                        Json::Arr(eigs.into_iter().map(jsonout::num).collect()),
                    );
                    o.insert("abelian_dim".into(), Json::Int(d.abelian.ncols() as i64));
                    o.insert(
                        "ideal_dims".into(),
                        Json::Arr(
                            d.ideals.iter().map(|m| Json::Int(m.ncols() as i64)).collect(),
                        ),
                    );
                    match qr::is_qra(&alg, &d) {
                        Ok(flag) => {
                            o.insert("is_qra".into(), Json::Bool(flag));
                        }
                        Err(e) => {
                            o.insert("is_qra_error".into(), Json::Str(e.to_string()));
                        }
                    }
                }
                Err(e) => {
                    o.insert("decomposition_error".into(), Json::Str(e.to_string()));
                }
            }
        }
    }
    Json::Obj(o)
}

fn special_flags_json(flags: &classify::SpecialFlags) -> Json {
    let mut o = Json::obj();
    o.insert("cosymplectic".into(), Json::Bool(flags.cosymplectic));
    o.insert("normal".into(), Json::Bool(flags.normal));
    o.insert("integrable".into(), Json::Bool(flags.integrable));
    o.insert(
        "alpha_sasakian".into(),
        flags.alpha_sasakian.map(jsonout::num).unwrap_or(Json::Null),
    );
    o.insert(
        "alpha_kenmotsu".into(),
        flags.alpha_kenmotsu.map(jsonout::num).unwrap_or(Json::Null),
    );
    o.insert("nearly_k_cosymplectic".into(), Json::Bool(flags.nearly_k_cosymplectic));
    o.insert("v_invariant_type".into(), Json::Bool(flags.v_invariant_type));
    o.insert("v_antiinvariant_type".into(), Json::Bool(flags.v_antiinvariant_type));
    o.insert("xi_antiinvariant_type".into(), Json::Bool(flags.xi_antiinvariant_type));
    o.insert("v_parallel".into(), Json::Bool(flags.v_parallel));
    Json::Obj(o)
}

/// Which taxonomies to run for a structure, honouring an explicit request.
fn taxonomy_plan(
    structure: &StructureTensor,
    request: Option<&str>,
    dim: usize,
) -> Result<Vec<TaxonomyId>, GeoError> {
    match request {
        Some("on3") => {
            if dim < 3 {
                return Err(GeoError::InvalidParams("on3 needs dim >= 3".into()));
            }
            Ok(vec![TaxonomyId::On3])
        }
        Some("gh") => match structure {
            StructureTensor::AlmostHermitian { .. } => Ok(vec![TaxonomyId::Gh4]),
            _ => Err(GeoError::InvalidParams(
                "taxonomy gh needs an almost_hermitian structure".into(),
            )),
        },
        Some("acms") => match structure {
            StructureTensor::AlmostContact { .. } => {
                Ok(vec![TaxonomyId::Acms12, TaxonomyId::AcmsPhi12])
            }
            _ => Err(GeoError::InvalidParams(
                "taxonomy acms needs an almost_contact structure".into(),
            )),
        },
        Some(other) => Err(GeoError::InvalidParams(format!("unknown taxonomy `{other}`"))),
        None => Ok(match structure {
            StructureTensor::AlmostHermitian { .. } => vec![TaxonomyId::Gh4],
            StructureTensor::AlmostContact { .. } => {
                vec![TaxonomyId::Acms12, TaxonomyId::AcmsPhi12]
            }
            _ => {
                if dim >= 3 {
                    vec![TaxonomyId::On3]
                } else {
                    vec![]
                }
            }
        }),
    }
}

fn run_structured(
    model: &FrameModel,
    structure: &StructureTensor,
    taxonomy_request: Option<&str>,
    tol_rel: f64,
    echo: Json,
) -> PipelineOutput {
    let mut report = Json::obj();
    report.insert("input".into(), echo);
    let diag = lie::validate_lie(model);
    let mut validation = Json::obj();
    validation.insert("lie_antisymmetry".into(), jsonout::num(diag.antisymmetry));
    validation.insert("lie_jacobi".into(), jsonout::num(diag.jacobi));
    validation.insert("structure_kind".into(), Json::Str(structure.kind().into()));
    validation.insert("dim".into(), Json::Int(model.dim() as i64));
    report.insert("validation".into(), Json::Obj(validation));
    if !diag.passes() {
        report.insert("status".into(), Json::Str("FAILED".into()));
        return PipelineOutput {
            report: Json::Obj(report),
            status: PipelineStatus::ValidationFailure(format!(
                "structure constants fail the Lie validator (antisymmetry {:.3e}, Jacobi {:.3e})",
                diag.antisymmetry, diag.jacobi
            )),
        };
    }
    let geo: StructuredGeometry = match selftest::analyze_structure(model, structure) {
        Ok(g) => g,
        Err(e) => {
            report.insert("status".into(), Json::Str("FAILED".into()));
            report.insert("error".into(), Json::Str(e.to_string()));
            return PipelineOutput { report: Json::Obj(report), status: classify_error(&e) };
        }
    };
    let mut connections = Json::obj();
    connections.insert("levi_civita".into(), jsonout::tensor3(geo.nabla.coeffs()));
    connections.insert("canonical".into(), jsonout::tensor3(geo.nabla_bar.coeffs()));
    report.insert("connections".into(), Json::Obj(connections));
    report.insert("h".into(), jsonout::tensor3(&geo.h));
    report.insert("residuals".into(), residuals_json(&geo.residuals));

    let plan = match taxonomy_plan(structure, taxonomy_request, model.dim()) {
        Ok(p) => p,
        Err(e) => {
            report.insert("status".into(), Json::Str("FAILED".into()));
            report.insert("error".into(), Json::Str(e.to_string()));
            return PipelineOutput { report: Json::Obj(report), status: classify_error(&e) };
        }
    };
    let mut classification = Json::obj();
    let mut acms_h_report = None;
    let mut acms_phi_report = None;
    for tax_id in plan {
        let n = match tax_id {
            TaxonomyId::On3 => model.dim(),
            TaxonomyId::Gh4 => model.dim() / 2,
            TaxonomyId::Acms12 | TaxonomyId::AcmsPhi12 => (model.dim() - 1) / 2,
        };
        let built = classify::build_taxonomy(tax_id, n);
        let result = built.and_then(|tax| {
            if tax_id == TaxonomyId::AcmsPhi12 {
                let forms = analysis::acms_forms(&geo.dec, &geo.nabla, &geo.h, model.frame())?;
                let phi_std =
                    classify::to_standard_coords(&forms.nabla_phi, &geo.dec, model.frame());
                classify::classify_acms_via_nabla_phi(&phi_std, &tax, tol_rel)
            } else {
                let h_std = classify::to_standard_coords(&geo.h, &geo.dec, model.frame());
                classify::classify(&h_std, &tax, tol_rel)
            }
        });
        match result {
            Ok(rep) => {
                let prefix = rep.taxonomy.index_prefix();
                classification
                    .insert(rep.taxonomy.as_str().to_string(), membership_json(prefix, &rep));
                match tax_id {
                    TaxonomyId::Acms12 => acms_h_report = Some(rep),
                    TaxonomyId::AcmsPhi12 => acms_phi_report = Some(rep),
                    _ => {}
                }
            }
            Err(e) => {
                report.insert("classification".into(), Json::Obj(classification));
                report.insert("status".into(), Json::Str("FAILED".into()));
                report.insert("error".into(), Json::Str(e.to_string()));
                return PipelineOutput { report: Json::Obj(report), status: classify_error(&e) };
            }
        }
    }
    report.insert("classification".into(), Json::Obj(classification));
    // a.c.m.s. extras: cross-check, forms, special flags.
    if let (Some(rep_h), Some(rep_phi)) = (&acms_h_report, &acms_phi_report) {
        let agreed = classify::cross_check_isomorphism(rep_h, rep_phi);
        report.insert("classification_cross_check".into(), Json::Bool(agreed));
        if !agreed {
            report.insert("status".into(), Json::Str("FAILED".into()));
            return PipelineOutput {
                report: Json::Obj(report),
                status: PipelineStatus::Tripwire(
                    "h-route and nabla-Phi-route memberships disagree under the fixed bijection"
                        .into(),
                ),
            };
        }
        match analysis::acms_forms(&geo.dec, &geo.nabla, &geo.h, model.frame()) {
            Ok(forms) => {
                let mut fo = Json::obj();
                fo.insert("delta_eta".into(), jsonout::num(forms.delta_eta));
                fo.insert("delta_phi".into(), jsonout::vector(&forms.delta_phi));
                fo.insert("beta".into(), jsonout::vector(&forms.beta));
                fo.insert("beta_bar".into(), jsonout::vector(&forms.beta_bar));
                fo.insert(
                    "reconstruction_residual".into(),
                    jsonout::num(forms.diagnostics.reconstruction),
                );
                report.insert("forms".into(), Json::Obj(fo));
                match classify::recognize_special(&geo.dec, model, &geo.nabla, &geo.h, &forms, rep_h)
                {
                    Ok(flags) => {
                        report.insert("special_flags".into(), special_flags_json(&flags));
                    }
                    Err(e) => {
                        report.insert("status".into(), Json::Str("FAILED".into()));
                        report.insert("error".into(), Json::Str(e.to_string()));
                        return PipelineOutput {
                            report: Json::Obj(report),
                            status: classify_error(&e),
                        };
                    }
                }
                let qh = analysis::quasi_homogeneity(&geo.h, &geo.nabla_bar, model.frame());
                let mut qo = Json::obj();
                qo.insert("residual".into(), jsonout::num(qh.residual));
                qo.insert(
                    "r1_parallel".into(),
                    qh.r1_parallel.map(jsonout::num).unwrap_or(Json::Null),
                );
                report.insert("quasi_homogeneity".into(), Json::Obj(qo));
            }
            Err(e) => {
                report.insert("status".into(), Json::Str("FAILED".into()));
                report.insert("error".into(), Json::Str(e.to_string()));
                return PipelineOutput { report: Json::Obj(report), status: classify_error(&e) };
            }
        }
    } else {
        let qh = analysis::quasi_homogeneity(&geo.h, &geo.nabla_bar, model.frame());
        let mut qo = Json::obj();
        qo.insert("residual".into(), jsonout::num(qh.residual));
        qo.insert("r1_parallel".into(), qh.r1_parallel.map(jsonout::num).unwrap_or(Json::Null));
        report.insert("quasi_homogeneity".into(), Json::Obj(qo));
    }
    report.insert("qr_algebra".into(), qr_section(&geo.h, model));
    let ok = geo.residuals.passes();
    report.insert("status".into(), Json::Str(if ok { "OK" } else { "FAILED" }.into()));
    let status = if ok {
        PipelineStatus::Ok
    } else {
        PipelineStatus::Tripwire(format!(
            "identity residuals exceed budget (exact {:.3e}, derived {:.3e})",
            geo.residuals.worst_exact(),
            geo.residuals.worst_derived()
        ))
    };
    PipelineOutput { report: Json::Obj(report), status }
}

/// Pipeline for an entry that carries a user-supplied h instead of a
/// structure tensor (the naturally reductive catalog entries).
fn run_intrinsic(model: &FrameModel, h: &Tensor3, tol_rel: f64, echo: Json) -> PipelineOutput {
    let mut report = Json::obj();
    report.insert("input".into(), echo);
    let nabla = lie::levi_civita(model);
    let hdir = analysis::h_directions(h, model.frame());
    let n = model.dim();
    let mut gamma = nabla.coeffs().clone();
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                gamma[(i, j, k)] -= hdir[i][(k, j)];
            }
        }
    }
    let nabla_bar = Connection::from_tensor(gamma);
    let mut connections = Json::obj();
    connections.insert("levi_civita".into(), jsonout::tensor3(nabla.coeffs()));
    connections.insert("canonical".into(), jsonout::tensor3(nabla_bar.coeffs()));
    report.insert("connections".into(), Json::Obj(connections));
    report.insert("h".into(), jsonout::tensor3(h));
    let curvature = analysis::curvature_relation_check(model, &nabla, &nabla_bar, h);
    let torsion_dual = {
        let direct = lie::frame_torsion(&nabla_bar, model);
        let from_h = riemgeo::structures::torsion_bar(h, model.frame());
        direct.sub(&from_h).amax()
    };
    let mut resid = Json::obj();
    resid.insert("curvature_relation".into(), jsonout::num(curvature));
    resid.insert("torsion_dual".into(), jsonout::num(torsion_dual));
    resid.insert("h_metric_skew".into(), jsonout::num(h.metric_skew_residual()));
    resid.insert("canonical_metric".into(), jsonout::num(nabla_bar.metric_residual(model.frame())));
    report.insert("residuals".into(), Json::Obj(resid));
    let mut classification = Json::obj();
    let mut status = PipelineStatus::Ok;
    if model.dim() >= 3 {
        match classify::build_taxonomy(TaxonomyId::On3, model.dim()).and_then(|tax| {
            let h_std = h.change_basis(model.frame().ortho_basis());
            classify::classify(&h_std, &tax, tol_rel)
        }) {
            Ok(rep) => {
                classification.insert("on3".into(), membership_json("T", &rep));
            }
            Err(e) => status = classify_error(&e),
        }
    }
    report.insert("classification".into(), Json::Obj(classification));
    report.insert("qr_algebra".into(), qr_section(h, model));
    let ok = status == PipelineStatus::Ok
        && curvature <= tol::IDENTITY
        && torsion_dual <= tol::EXACT * 100.0;
    report.insert("status".into(), Json::Str(if ok { "OK" } else { "FAILED" }.into()));
    if ok {
        PipelineOutput { report: Json::Obj(report), status: PipelineStatus::Ok }
    } else if status == PipelineStatus::Ok {
        PipelineOutput {
            report: Json::Obj(report),
            status: PipelineStatus::Tripwire("identity residuals exceed budget".into()),
        }
    } else {
        PipelineOutput { report: Json::Obj(report), status }
    }
}

/// Run the pipeline on a parsed geometry file.
pub fn run_geometry_file(gf: &GeometryFile) -> PipelineOutput {
    let tol_rel = effective_tol(gf.tol_rel);
    let mut echo = Json::obj();
    echo.insert("source".into(), Json::Str("geometry_file".into()));
    echo.insert("dim".into(), Json::Int(gf.dim as i64));
    echo.insert("structure_kind".into(), Json::Str(gf.structure.kind().into()));
    echo.insert(
        "taxonomy".into(),
        gf.taxonomy.as_ref().map(|t| Json::Str(t.clone())).unwrap_or(Json::Null),
    );
    echo.insert("tol_rel".into(), jsonout::num(tol_rel));
    run_structured(&gf.model, &gf.structure, gf.taxonomy.as_deref(), tol_rel, Json::Obj(echo))
}

/// Run the pipeline on a catalog entry, checking its recorded class.
pub fn run_catalog_entry(entry: &CatalogEntry, tol_override: Option<f64>) -> PipelineOutput {
    let tol_rel = effective_tol(tol_override);
    let mut echo = Json::obj();
    echo.insert("source".into(), Json::Str("catalog".into()));
    echo.insert("name".into(), Json::Str(entry.name.clone()));
    let mut params = Json::obj();
    for (k, v) in &entry.params {
        params.insert(k.clone(), Json::Str(v.clone()));
    }
    echo.insert("params".into(), Json::Obj(params));
    let mut out = match (&entry.structure, &entry.intrinsic_h) {
        (Some(s), _) => run_structured(&entry.model, s, None, tol_rel, Json::Obj(echo)),
        (None, Some(h)) => run_intrinsic(&entry.model, h, tol_rel, Json::Obj(echo)),
        (None, None) => {
            return PipelineOutput {
                report: Json::Null,
                status: PipelineStatus::ValidationFailure(
                    "catalog entry carries neither a structure nor an h".into(),
                ),
            }
        }
    };
    // Expected-class comparison.
    if let Some((tax, want)) = &entry.expected_class {
        let prefix = tax.index_prefix();
        let want_labels: Vec<Json> =
            want.iter().map(|i| Json::Str(format!("{prefix}{i}"))).collect();
        if let Json::Obj(map) = &mut out.report {
            map.insert("expected_membership".into(), Json::Arr(want_labels.clone()));
            let got = map
                .get("classification")
                .and_then(|c| match c {
                    Json::Obj(cm) => cm.get(tax.as_str()),
                    _ => None,
                })
                .and_then(|t| match t {
                    Json::Obj(tm) => tm.get("membership"),
                    _ => None,
                })
                .cloned();
            let matches = got.as_ref() == Some(&Json::Arr(want_labels));
            map.insert("expected_membership_ok".into(), Json::Bool(matches));
            if !matches && out.status == PipelineStatus::Ok {
                map.insert("status".into(), Json::Str("FAILED".into()));
                out.status = PipelineStatus::Tripwire(format!(
                    "membership does not match the recorded class of `{}`",
                    entry.name
                ));
            }
        }
    }
    out
}

/// Default tolerance with the documented environment override.
pub fn effective_tol(explicit: Option<f64>) -> f64 {
    if let Some(t) = explicit {
        return t;
    }
    if let Ok(s) = std::env::var("RIEMGEO_TOL") {
        if let Ok(t) = s.parse::<f64>() {
            if t > 0.0 && t < 1.0 {
                return t;
            }
        }
    }
    tol::MEMBERSHIP_REL
}
