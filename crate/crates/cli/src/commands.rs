use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context, Result};
use opetri_core::analyze::{calibrate, sensitivity, sensitivity_heatmap, DEFAULT_STEP};
use opetri_core::compose::{
    oapply, oapply_typed, validate_uwd, Binding, OpenPetriNet, TypedOpenPetriNet,
};
use opetri_core::dot::{to_dot, DotOptions};
use opetri_core::dynamics::{compose_dynamics, mass_action};
use opetri_core::morphism::{admissible_transition_images, validate_morphism};
use opetri_core::petri::{validate_net, PetriNet};
use opetri_core::solve::{simulate, Trajectory};
use opetri_core::stratify::{stratify_and_project, typing_colors};
use serde::Serialize;

use crate::project::{by_name, dynamics_of, Model, Project, SimulationEntry};
use crate::{Style, UsageError};

pub struct Ctx {
    pub project: Project,
    pub out: PathBuf,
    pub seed: u64,
    pub style: Style,
}

impl Ctx {
    fn write(&self, file: &str, contents: &str) -> Result<()> {
        fs::create_dir_all(&self.out)
            .with_context(|| format!("cannot create {}", self.out.display()))?;
        let path = self.out.join(file);
        fs::write(&path, contents).with_context(|| format!("cannot write {}", path.display()))?;
        println!("wrote {}", path.display());
        Ok(())
    }

    fn write_json<T: Serialize>(&self, file: &str, value: &T) -> Result<()> {
        self.write(file, &json(value)?)
    }
}

pub fn json<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

pub fn validate(ctx: &Ctx, names: &[String]) -> Result<bool> {
    let p = &ctx.project;
    let wanted = |n: &str| names.is_empty() || names.iter().any(|x| x == n);
    for n in names {
        let known = p.models.contains_key(n)
            || p.uwds.contains_key(n)
            || p.datasets.contains_key(n)
            || p.fits.contains_key(n)
            || p.simulations.contains_key(n)
            || p.sensitivities.contains_key(n);
        if !known {
            return Err(UsageError(format!("no resource named '{n}'")).into());
        }
    }
    let mut report: Vec<(String, Vec<String>)> = Vec::new();
    let strs =
        |v: Vec<opetri_core::petri::Violation>| v.iter().map(|x| x.to_string()).collect::<Vec<_>>();
    for (k, m) in p.models.iter().filter(|(k, _)| wanted(k)) {
        let problems = match m {
            Model::Net(n) => strs(validate_net(n)),
            Model::Open(o) => strs(o.validate()),
            Model::Typed(t) => strs(t.validate()),
            Model::TypedOpen(t) => strs(t.validate()),
            Model::Dynamics(d) => dynamics_of(k, d)
                .err()
                .map(|e| format!("{e:#}"))
                .into_iter()
                .collect(),
        };
        report.push((format!("{} '{k}'", m.kind()), problems));
    }
    for (k, u) in p.uwds.iter().filter(|(k, _)| wanted(k)) {
        report.push((format!("uwd '{k}'"), strs(validate_uwd(u))));
    }
    for (k, d) in p.datasets.iter().filter(|(k, _)| wanted(k)) {
        report.push((
            format!("dataset '{k}'"),
            d.validate()
                .err()
                .map(|e| e.to_string())
                .into_iter()
                .collect(),
        ));
    }
    for (k, f) in p.fits.iter().filter(|(k, _)| wanted(k)) {
        let problems = match p.net(&f.net) {
            Ok(net) => f
                .spec
                .validate(net)
                .err()
                .map(|e| e.to_string())
                .into_iter()
                .collect(),
            Err(e) => vec![format!("{e:#}")],
        };
        report.push((format!("fit '{k}'"), problems));
    }
    let mut ok = true;
    for (what, problems) in &report {
        if problems.is_empty() {
            println!("{} {what}", ctx.style.good("ok"));
        } else {
            ok = false;
            println!("{} {what}", ctx.style.bad("invalid"));
            for x in problems {
                println!("  {x}");
            }
        }
    }
    Ok(ok)
}

/// Parses `BOX=MODEL` pairs; boxes left out are bound to the model of the
/// same name.
fn binding_names(boxes: &[String], pairs: &[String]) -> Result<BTreeMap<String, String>> {
    let mut m = BTreeMap::new();
    for p in pairs {
        let (b, r) = p
            .split_once('=')
            .ok_or_else(|| UsageError(format!("binding '{p}' is not of the form BOX=MODEL")))?;
        if m.insert(b.to_string(), r.to_string()).is_some() {
            return Err(UsageError(format!("box '{b}' is bound twice")).into());
        }
    }
    for b in boxes {
        m.entry(b.clone()).or_insert_with(|| b.clone());
    }
    Ok(m)
}

pub fn compose(ctx: &Ctx, uwd: &str, pairs: &[String], name: Option<&str>) -> Result<()> {
    let p = &ctx.project;
    let u = p.uwd(uwd)?;
    let boxes: Vec<String> = u.boxes.iter().map(|b| b.name.clone()).collect();
    let names = binding_names(&boxes, pairs)?;
    let mut models = BTreeMap::new();
    for (b, r) in &names {
        models.insert(b.clone(), p.model(r)?);
    }
    let name = name.unwrap_or(uwd);
    let all_typed = !models.is_empty() && models.values().all(|m| matches!(m, Model::TypedOpen(_)));
    if all_typed {
        let binding: Binding<TypedOpenPetriNet> = models
            .iter()
            .map(|(b, m)| match m {
                Model::TypedOpen(t) => (b.clone(), t.clone()),
                _ => unreachable!(),
            })
            .collect();
        let ty = binding
            .values()
            .next()
            .map(|t| t.typed.type_net.clone())
            .unwrap_or_default();
        let c = oapply_typed(u, &binding, &ty).with_context(|| format!("composing '{uwd}'"))?;
        ctx.write_json(&format!("{name}.json"), &c)?;
        let mut o = typing_colors(&c.typed);
        o.name = Some(name.to_string());
        ctx.write(&format!("{name}.dot"), &to_dot(&c.typed.net, &o))?;
        return Ok(());
    }
    let mut binding: Binding<OpenPetriNet> = BTreeMap::new();
    for (b, m) in &models {
        let open = match m {
            Model::Open(o) => o.clone(),
            Model::TypedOpen(t) => t.open(),
            other => {
                return Err(UsageError(format!(
                    "box '{b}' is bound to '{}', a {}; composition needs open nets",
                    names[b],
                    other.kind()
                ))
                .into())
            }
        };
        binding.insert(b.clone(), open);
    }
    let c = oapply(u, &binding).with_context(|| format!("composing '{uwd}'"))?;
    ctx.write_json(&format!("{name}.json"), &c)?;
    ctx.write(
        &format!("{name}.dot"),
        &to_dot(&c.net, &DotOptions::named(name)),
    )
}

#[derive(Serialize)]
struct Projections<'a> {
    left: &'a opetri_core::morphism::PetriMorphism,
    right: &'a opetri_core::morphism::PetriMorphism,
}

pub fn stratify(ctx: &Ctx, a: &str, b: &str, name: Option<&str>) -> Result<()> {
    let (x, y) = (ctx.project.typed(a)?, ctx.project.typed(b)?);
    let (s, dots) =
        stratify_and_project(x, y).with_context(|| format!("stratifying '{a}' by '{b}'"))?;
    let name = name
        .map(str::to_string)
        .unwrap_or_else(|| format!("{a}_x_{b}"));
    ctx.write_json(&format!("{name}.json"), &s.result)?;
    ctx.write_json(
        &format!("{name}.projections.json"),
        &Projections {
            left: &s.proj_left,
            right: &s.proj_right,
        },
    )?;
    ctx.write(&format!("{name}.dot"), &dots.result)?;
    ctx.write(&format!("{name}.left.dot"), &dots.left)?;
    ctx.write(&format!("{name}.right.dot"), &dots.right)
}

/// Checks a typing and, for every transition it fails to type, lists the
/// type transitions it could map to.
pub fn typecheck(ctx: &Ctx, args: &[String]) -> Result<bool> {
    let p = &ctx.project;
    let (label, net, typing, ty) = match args {
        [t] => {
            let t = p.typed(t)?;
            (args[0].clone(), &t.net, t.typing.clone(), &t.type_net)
        }
        [n, f, t] => {
            let typing = p
                .typings
                .get(f)
                .ok_or_else(|| UsageError(format!("no typing named '{f}'")))?
                .clone();
            (n.clone(), p.net(n)?, typing, p.net(t)?)
        }
        _ => {
            return Err(
                UsageError("typecheck takes TYPED_NET or NET TYPING TYPE_NET".into()).into(),
            )
        }
    };
    let v = validate_morphism(&typing, net, ty);
    let mut out = String::new();
    let species_ok = typing.species_map.len() == net.species.len()
        && typing.species_map.iter().all(|&s| s < ty.species.len());
    if species_ok {
        for (t, tr) in net.transitions.iter().enumerate() {
            let adm = admissible_transition_images(net, ty, &typing.species_map, t);
            let assigned = typing.transition_map.get(t).copied();
            if assigned.is_some_and(|a| adm.contains(&a)) {
                continue;
            }
            let names: Vec<&str> = adm
                .iter()
                .map(|&u| ty.transitions[u].name.as_str())
                .collect();
            if names.is_empty() {
                let _ = writeln!(out, "  transition '{}' has no valid typing", tr.name);
            } else {
                let _ = writeln!(
                    out,
                    "  transition '{}' admits: {}",
                    tr.name,
                    names.join(", ")
                );
            }
        }
    }
    if v.is_empty() {
        println!("{} '{label}' is well typed", ctx.style.good("ok"));
        return Ok(true);
    }
    println!(
        "{} '{label}': {} violations",
        ctx.style.bad("ill-typed"),
        v.len()
    );
    for x in &v {
        println!("  {x}");
    }
    print!("{out}");
    Ok(false)
}

fn run_simulation(p: &Project, s: &SimulationEntry) -> Result<Trajectory> {
    let field = match (&s.model.net, &s.model.uwd) {
        (Some(n), _) => {
            let net = p.net(n)?;
            mass_action(&net.with_rates(&rates_with(net, &s.rates)?))
        }
        (None, Some(u)) => {
            let uwd = p.uwd(u)?;
            let boxes: Vec<String> = uwd.boxes.iter().map(|b| b.name.clone()).collect();
            let mut names = s.model.binding.clone();
            for b in boxes {
                names.entry(b.clone()).or_insert(b);
            }
            let b = p.dynamics_binding(&names)?;
            compose_dynamics(uwd, &b)
                .with_context(|| format!("composing '{u}'"))?
                .field
        }
        (None, None) => unreachable!("checked on load"),
    };
    let u0 = by_name("u0", field.var_names(), &s.u0)?;
    Ok(simulate(&field, &u0, &s.config)?)
}

/// Rates of `net` in transition order after applying overrides.
fn rates_with(net: &PetriNet, overrides: &BTreeMap<String, f64>) -> Result<Vec<f64>> {
    let mut r = net.rates();
    for (k, v) in overrides {
        let t = net
            .transition_index(k)
            .ok_or_else(|| anyhow!("'{k}' is not a transition"))?;
        r[t] = *v;
    }
    Ok(r)
}

pub fn simulate_cmd(ctx: &Ctx, name: &str) -> Result<()> {
    let s = ctx
        .project
        .simulations
        .get(name)
        .ok_or_else(|| UsageError(format!("no simulation named '{name}'")))?;
    let tr = run_simulation(&ctx.project, s).with_context(|| format!("simulation '{name}'"))?;
    ctx.write(&format!("{name}.csv"), &tr.to_csv())
}

pub fn calibrate_cmd(ctx: &Ctx, name: &str) -> Result<()> {
    let p = &ctx.project;
    let f = p
        .fits
        .get(name)
        .ok_or_else(|| UsageError(format!("no fit named '{name}'")))?;
    let net = p.net(&f.net)?;
    let u0 = by_name("u0", &net.species_names(), &f.u0)?;
    let fit = calibrate(
        net,
        &u0,
        &p.datasets[&f.dataset],
        &f.spec,
        &f.config,
        ctx.seed,
    )
    .with_context(|| format!("fit '{name}'"))?;
    ctx.write_json(&format!("{name}.json"), &fit.summary())?;
    let fitted = simulate(
        &mass_action(&net.with_rates(&fit.rate_vector(net))),
        &fit.u0_vector(net),
        &f.config,
    )?;
    ctx.write(&format!("{name}.csv"), &fitted.to_csv())?;
    if !fit.converged {
        eprintln!(
            "{} fit '{name}' used its whole evaluation budget",
            ctx.style.warn("warning:")
        );
    }
    Ok(())
}

pub fn sensitivity_cmd(ctx: &Ctx, name: &str) -> Result<()> {
    let p = &ctx.project;
    let s = p
        .sensitivities
        .get(name)
        .ok_or_else(|| UsageError(format!("no sensitivity named '{name}'")))?;
    let net = p.net(&s.net)?;
    let rates = rates_with(net, &s.rates)?;
    let u0 = by_name("u0", &net.species_names(), &s.u0)?;
    let sens = sensitivity(
        net,
        &rates,
        &u0,
        &s.outcome,
        &s.config,
        s.step.unwrap_or(DEFAULT_STEP),
    )
    .with_context(|| format!("sensitivity '{name}'"))?;
    ctx.write_json(&format!("{name}.json"), &sens)?;
    ctx.write(&format!("{name}.dot"), &sensitivity_heatmap(net, &sens)?)
}

pub fn export_dot(ctx: &Ctx, name: &str, rates: bool) -> Result<()> {
    let p = &ctx.project;
    let mut o = match p.model(name)? {
        Model::Typed(t) => typing_colors(t),
        Model::TypedOpen(t) => typing_colors(&t.typed),
        _ => DotOptions::default(),
    };
    o.name = Some(name.to_string());
    o.show_rates = rates;
    let net = p.net(name)?;
    ctx.write(&format!("{name}.dot"), &to_dot(net, &o))
}

pub fn fixtures(out: &Path) -> Result<()> {
    for (file, contents) in crate::fixture_project::files()? {
        let path = out.join(&file);
        if let Some(dir) = path.parent() {
            fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
        }
        fs::write(&path, contents).with_context(|| format!("cannot write {}", path.display()))?;
        println!("wrote {}", path.display());
    }
    Ok(())
}

pub fn list(ctx: &Ctx) {
    let p = &ctx.project;
    for (k, m) in &p.models {
        println!("{:<16} {k}", m.kind());
    }
    let sections: [(&str, Vec<&String>); 6] = [
        ("typing", p.typings.keys().collect()),
        ("uwd", p.uwds.keys().collect()),
        ("dataset", p.datasets.keys().collect()),
        ("simulation", p.simulations.keys().collect()),
        ("fit", p.fits.keys().collect()),
        ("sensitivity", p.sensitivities.keys().collect()),
    ];
    for (kind, names) in sections {
        for k in names {
            println!("{kind:<16} {k}");
        }
    }
}
