//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! `cargo test -p ffsieve-cli --test acceptance [-- N ...]` runs all criteria or the listed ones.
//! A FAIL is tolerated only for criteria in KNOWN_RED, and only while the observed
//! deviation is exactly the recorded one. Anything else (an unexpected failure, a
//! broken sub-check, a known deviation that changed or vanished) exits nonzero.
//! FFSIEVE_BLESS=1 rewrites the frozen enumeration fixture.

use std::collections::{BTreeMap, BTreeSet};
use std::path::PathBuf;
use std::time::Instant;

use ffsieve::arith::{factor_u64, divisors_u64, prime_powers_in, IntFactorization};
use ffsieve::charsum::{AddChar, CharCtx};
use ffsieve::criteria::{
    criteria_verdict, divides_q_pow_m_minus_1, m7_bound, omega_threshold_bound, threshold_row, CapRule,
    CriteriaOptions, M7Case, PUBLISHED_TABLE1,
};
use ffsieve::field::FieldCtx;
use ffsieve::freeness::{efree_decomposition_check, is_r_primitive, wfree_norm_check};
use ffsieve::par::Exec;
use ffsieve::search::{
    count_all, count_in, default_require_degree_m, find_witness_in, m4_necessary_condition_check, signed_coeffs,
    verify_witness, BinReport, Scanner,
};
use ffsieve::tables::Preset;
use ffsieve_oracle::{Oracle, GRID};

/// Character sums must land this close to 0 or 1.
const CHAR_TOL: f64 = 1e-6;
/// First ω step: δ above, Δ and T below these.
const OMEGA_DELTA_MIN: f64 = 0.008195;
const OMEGA_BIG_DELTA_MAX: f64 = 1.18e6;
const OMEGA_T_MAX: f64 = 9.45e14;
/// Final bound, three significant digits.
const OMEGA_T_PRINTED: &str = "2.75e7";
/// m = 7, Case 1 after one repeat of the reduction.
const M7_BOUND: u64 = 780_097;
/// Fields of the coefficient-identity grid beyond the oracle grid.
const EXTRA_IDENTITY_FIELDS: [(u64, usize); 4] = [(2, 16), (4, 8), (16, 4), (256, 2)];
/// Pairs enumerated in full for the per-(a, b) tables.
const DESK_SCALE: [(u64, usize); 9] = [(2, 8), (2, 10), (2, 12), (2, 14), (2, 16), (2, 18), (4, 7), (4, 8), (5, 8)];
/// Soundness scan covers q^m up to this.
const SOUNDNESS_LIMIT: u64 = 1 << 22;

/// Deviations of the literal statements that are understood and recorded. The strings
/// are the exact `deviation` values the criteria report.
const KNOWN_RED: [(usize, &str); 2] = [
    (4, "literal w-free norm statement fails for 62 of 78 (field, r) cases, first (q,m,r)=(3,2,1)"),
    (
        11,
        "m=2 q=2: 1 witnesses, all a=0; m=2 q=5: 4 witnesses, all a=0; m=3 q=4: 6 witnesses, a!=0 only; \
         m=3 q=7: 12 witnesses, a!=0 only; m=3 q=13: 48 witnesses, a!=0 only; m=4 q=7: 80 witnesses, a!=0 only",
    ),
];

#[derive(Default)]
struct Outcome {
    /// The statement holds as written.
    pass: bool,
    detail: String,
    /// Compact description of how the literal statement fails.
    deviation: String,
    /// Sub-checks that must hold even for a known deviation.
    broken: Vec<String>,
}

impl Outcome {
    fn check(&mut self, ok: bool, what: impl FnOnce() -> String) {
        if !ok {
            self.broken.push(what());
        }
    }
}

fn binary_near(v: f64, want: bool) -> bool {
    (v - if want { 1.0 } else { 0.0 }).abs() < CHAR_TOL
}

fn oracle_index(o: &Oracle, x: &ffsieve::field::FFElem) -> u32 {
    o.from_coeffs(x.coeffs())
}

fn int_fact(n: u64) -> IntFactorization {
    IntFactorization::from_u64_pairs(&factor_u64(n))
}

/// 1. a_m = N(ξ) and a_{m−1} = N(ξ)·Tr(ξ⁻¹) for every ξ of degree m.
fn coefficient_identity() -> Outcome {
    let mut out = Outcome::default();
    let mut fields = GRID.to_vec();
    fields.extend(EXTRA_IDENTITY_FIELDS);
    let mut checked = 0u64;
    for (q, m) in &fields {
        let ctx = FieldCtx::new(*q, *m).unwrap();
        let f = ctx.base();
        for x in ctx.enumerate().unwrap().filter(|x| !x.is_zero()) {
            let mp = ctx.min_poly(&x).unwrap();
            if mp.degree() != *m {
                continue;
            }
            let a = signed_coeffs(&mp, f);
            let n = ctx.norm(&x).unwrap();
            let ti = ctx.trace(&ctx.inv(&x).unwrap()).unwrap();
            checked += 1;
            let ok = a[m - 1] == n && (*m < 2 || a[m - 2] == f.mul(n, ti));
            out.check(ok, || format!("({q},{m}) {:?}: a = {a:?}, N = {n}, Tr(1/x) = {ti}", x.coeffs()));
        }
    }
    out.pass = out.broken.is_empty();
    out.detail = format!("{} fields, {checked} elements of full degree", fields.len());
    out
}

/// 2. Characteristic functions against the oracle's direct predicates.
fn characteristic_functions() -> Outcome {
    let mut out = Outcome::default();
    let mut evals = 0u64;
    for (q, m) in [(2u64, 3usize), (3, 2), (2, 4), (5, 2), (3, 3)] {
        let ctx = FieldCtx::new(q, m).unwrap();
        let cc = CharCtx::new(&ctx).unwrap();
        let o = Oracle::canonical(q, m);
        let n = q.pow(m as u32) - 1;
        let es = divisors_u64(n);
        let fs: Vec<_> = cc.divisors().to_vec();
        for x in ctx.enumerate().unwrap() {
            let xo = oracle_index(&o, &x);
            let tag = format!("F_{}^{} {:?}", q, m, x.coeffs());
            let v = cc.i0_char(&x);
            out.check(v.is_ok_and(|v| binary_near(v, x.is_zero())), || format!("{tag}: I0"));
            for a in 0..q as u32 {
                let v = cc.tau_char(&x, a);
                out.check(v.is_ok_and(|v| binary_near(v, o.trace(xo) == a)), || format!("{tag}: tau a={a}"));
            }
            for f in &fs {
                let irr: Vec<Vec<u32>> = f.factors.iter().map(|(p, _)| p.coeffs().to_vec()).collect();
                let v = cc.kappa_char(&x, &f.base);
                out.check(v.is_ok_and(|v| binary_near(v, o.is_f_free(xo, &irr))), || format!("{tag}: kappa {:?}", f.base));
            }
            evals += 1 + q + fs.len() as u64;
            if x.is_zero() {
                continue;
            }
            for c in 1..q as u32 {
                let v = cc.eta_char(&x, c);
                out.check(v.is_ok_and(|v| binary_near(v, o.norm(xo) == c)), || format!("{tag}: eta c={c}"));
            }
            for &e in &es {
                let v = cc.rho_char(&x, &int_fact(e));
                out.check(v.is_ok_and(|v| binary_near(v, o.is_l_free(xo, e))), || format!("{tag}: rho e={e}"));
            }
            evals += q - 1 + es.len() as u64;
        }
    }
    out.pass = out.broken.is_empty();
    out.detail = format!("F_8, F_9, F_16, F_25, F_27: {evals} evaluations within {CHAR_TOL:e} of the predicate");
    out
}

/// 3. Orthogonality sum is 1 exactly when λ = g∘Ω, and λ has q^{deg g} preimages
/// when Ord(λ) | (x^m−1)/g, none otherwise.
fn orthogonality_lemma() -> Outcome {
    let mut out = Outcome::default();
    let mut triples = 0u64;
    for (q, m) in [(2u64, 3usize), (2, 4)] {
        let ctx = FieldCtx::new(q, m).unwrap();
        let cc = CharCtx::new(&ctx).unwrap();
        let f = ctx.base();
        let xm1 = cc.xm1().clone();
        let size = q.pow(m as u32) as u32;
        for g in cc.divisors().to_vec() {
            let ge = xm1.exponents_of(&g.base, f).unwrap();
            for t in 0..size {
                let lam = AddChar { theta: t };
                let mut hits = 0usize;
                for w in 0..size {
                    let om = AddChar { theta: w };
                    let comp = cc.is_composition(&g.base, lam, om);
                    hits += comp as usize;
                    let v = cc.lemma25_sum(&g.base, lam, om);
                    triples += 1;
                    out.check(v.is_ok_and(|v| binary_near(v, comp)), || format!("F_{q}^{m} g={:?} λ={t} Ω={w}", g.base));
                }
                let ord = cc.fq_order_of_char(lam);
                let oe = xm1.exponents_of(&ord, f).unwrap();
                let divides = oe.iter().zip(&ge).zip(&xm1.factors).all(|((o, g), (_, mult))| o + g <= *mult);
                let want = if divides { (q as usize).pow(g.base.degree() as u32) } else { 0 };
                out.check(hits == want && cc.preimage_count(&g.base, lam) == hits, || {
                    format!("F_{q}^{m} g={:?} λ={t}: {hits} preimages, expected {want}", g.base)
                });
            }
        }
    }
    out.pass = out.broken.is_empty();
    out.detail = format!("F_8/F_2 and F_16/F_2: {triples} (g, λ, Ω) triples");
    out
}

/// 4. e-free decomposition, r-primitive = r-th powers of primitive elements, and the norm
/// set of r-primitive elements.
fn structural_lemmas() -> Outcome {
    let mut out = Outcome::default();
    let mut literal_fail = Vec::new();
    let mut cases = 0;
    for (q, m) in GRID {
        let ctx = FieldCtx::new(q, m).unwrap();
        let grp = ctx.group_factorization().clone();
        let n = q.pow(m as u32) - 1;
        let nonzero: Vec<_> = ctx.enumerate().unwrap().filter(|x| !x.is_zero()).collect();
        for e in divisors_u64(n) {
            let ef = int_fact(e);
            for x in &nonzero {
                let (a, b, c) = efree_decomposition_check(&ctx, x, &ef, &grp).unwrap();
                out.check(a == (b && c), || format!("({q},{m}) e={e} {:?}: {a} vs ({b}, {c})", x.coeffs()));
            }
        }
        let primitive: Vec<_> = nonzero.iter().filter(|x| is_r_primitive(&ctx, x, 1, &grp).unwrap()).collect();
        for r in divisors_u64(n) {
            let direct: BTreeSet<Vec<u32>> = nonzero
                .iter()
                .filter(|x| is_r_primitive(&ctx, x, r, &grp).unwrap())
                .map(|x| x.coeffs().to_vec())
                .collect();
            let powers: BTreeSet<Vec<u32>> =
                primitive.iter().map(|x| ctx.pow_u64(x, r).unwrap().coeffs().to_vec()).collect();
            out.check(direct == powers, || format!("({q},{m}) r={r}: r-primitive set differs from primitive^r"));
            let w = wfree_norm_check(&ctx, r).unwrap();
            out.check(w.holds, || format!("({q},{m}) r={r}: norms {:?} vs order-(q-1)/w set {:?}", w.attained, w.feasible));
            cases += 1;
            if !w.holds_literal {
                literal_fail.push((q, m, r));
            }
        }
    }
    out.pass = literal_fail.is_empty() && out.broken.is_empty();
    out.detail = format!(
        "{} towers, every e and r: decomposition and r-th power sets agree; norms of r-primitive elements are \
         exactly the elements of order (q-1)/gcd(r,q-1)",
        GRID.len()
    );
    if let Some(&(q, m, r)) = literal_fail.first() {
        out.deviation = format!(
            "literal w-free norm statement fails for {} of {cases} (field, r) cases, first (q,m,r)=({q},{m},{r})",
            literal_fail.len()
        );
    }
    out
}

fn table_criterion(presets: &[Preset]) -> Outcome {
    let mut out = Outcome::default();
    let mut parts = Vec::new();
    for &p in presets {
        let (s, _) = ffsieve_cli::run_table(p, None, &mut std::io::sink()).unwrap();
        let d = &s.diff;
        out.check(d.acceptable(), || format!("{p}: exceptions not in the published list: {:?}", d.new));
        if d.exact() {
            parts.push(format!("{p}: {} open pairs, exact ({} pairs checked)", d.found.len(), s.checked));
        } else {
            parts.push(format!("{p}: {} open, published pairs settled here: {:?}", d.found.len(), d.resolved));
        }
    }
    out.pass = out.broken.is_empty();
    out.detail = parts.join("; ");
    out
}

/// 8. Threshold rows and the ω iteration constants.
fn thresholds() -> Outcome {
    let mut out = Outcome::default();
    for (r, q0, m0) in PUBLISHED_TABLE1 {
        let row = threshold_row(r, m0);
        out.check(row.as_ref().is_some_and(|w| w.q0 == q0 && w.nonincreasing), || {
            format!("row R={r} m0={m0}: got {:?}, expected q0 = {q0}", row.as_ref().map(|w| w.q0))
        });
    }
    let om = omega_threshold_bound(7, 11, 3, 1, 9631, 18);
    let first = &om.steps[0];
    let num = |s: &str| s.parse::<f64>().unwrap_or(f64::NAN);
    out.check(num(&first.delta) > OMEGA_DELTA_MIN, || format!("δ = {}", first.delta));
    out.check(num(&first.big_delta) < OMEGA_BIG_DELTA_MAX, || format!("Δ = {}", first.big_delta));
    out.check(num(&first.t) < OMEGA_T_MAX, || format!("T = {}", first.t));
    out.check(om.t_printed == OMEGA_T_PRINTED, || format!("final bound {}", om.t_printed));
    let m7 = m7_bound(M7Case::Coprime, 54, 100_000, 2, CapRule::AllPrimes);
    out.check(m7[1].q_bound_floor == M7_BOUND, || format!("m = 7 bound {}", m7[1].q_bound_floor));
    out.pass = out.broken.is_empty();
    out.detail = format!(
        "{} rows; δ = {}, Δ = {}, T = {}, final {}, m = 7 bound {}",
        PUBLISHED_TABLE1.len(),
        first.delta,
        first.big_delta,
        first.t,
        om.t_printed,
        m7[1].q_bound_floor
    );
    out
}

fn fixture_path() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures/desk_scale.json")
}

/// 9. Full per-(a, b) tables for the open desk-scale pairs: deterministic, frozen, and
/// every witness re-verified.
fn desk_scale() -> Outcome {
    let mut out = Outcome::default();
    let mut tables: BTreeMap<String, BinReport> = BTreeMap::new();
    let mut lines = Vec::new();
    for (q, m) in DESK_SCALE {
        let s = Scanner::new(q, m, 3, 1, default_require_degree_m(m, 1)).unwrap();
        let par = count_in(&s, Exec::Auto).unwrap();
        let seq = count_in(&s, Exec::Sequential).unwrap();
        out.check(par == seq, || format!("({q},{m}): parallel and sequential tables differ"));
        let mut verified = 0;
        for bin in &par.bins {
            let w = find_witness_in(&s, bin.a, bin.b).unwrap();
            out.check(w.is_some() == (bin.count > 0), || format!("({q},{m}) (a,b)=({},{}): search and count disagree", bin.a, bin.b));
            if let Some(w) = w {
                let r = verify_witness(&s, bin.a, bin.b, &w);
                out.check(r.is_ok(), || format!("({q},{m}) (a,b)=({},{}): {r:?}", bin.a, bin.b));
                verified += 1;
            }
        }
        let feasible = par.bins.iter().filter(|b| b.feasible).count();
        lines.push(format!(
            "({q},{m}): {}/{feasible} feasible cells hit, {verified} witnesses verified, total {}",
            feasible - par.feasible_empty().len(),
            par.total
        ));
        tables.insert(format!("{q},{m}"), par);
    }
    let body = serde_json::to_string_pretty(&tables).unwrap() + "\n";
    if std::env::var_os("FFSIEVE_BLESS").is_some() {
        std::fs::write(fixture_path(), &body).unwrap();
    }
    match std::fs::read_to_string(fixture_path()) {
        Ok(frozen) => {
            let frozen: BTreeMap<String, BinReport> = serde_json::from_str(&frozen).unwrap();
            out.check(frozen == tables, || "tables differ from fixtures/desk_scale.json".into());
        }
        Err(e) => out.broken.push(format!("fixtures/desk_scale.json: {e} (run with FFSIEVE_BLESS=1)")),
    }
    out.pass = out.broken.is_empty();
    out.detail = lines.join("; ");
    out
}

/// 10. Every pair the criteria prove with q^m ≤ 2^22 has a witness in every feasible cell.
fn soundness() -> Outcome {
    let mut out = Outcome::default();
    let opts = CriteriaOptions::default();
    let mut proven = Vec::new();
    for m in 2..64u64 {
        for q in prime_powers_in(2, SOUNDNESS_LIMIT + 1) {
            match q.checked_pow(m as u32) {
                Some(s) if s <= SOUNDNESS_LIMIT => {}
                _ => break,
            }
            if divides_q_pow_m_minus_1(q, m, 3) && criteria_verdict(q, m, 3, 1, &opts).unwrap().is_proven() {
                proven.push((q, m));
            }
        }
    }
    out.check(proven.contains(&(4, 11)), || "(4,11) is not proven by the criteria".into());
    for &(q, m) in &proven {
        let rep = count_all(q, m as usize, 3, 1).unwrap();
        out.check(rep.all_feasible_hit(), || format!("({q},{m}): empty feasible cells {:?}", rep.feasible_empty()));
        out.check(rep.infeasible_nonzero().is_empty(), || format!("({q},{m}): witnesses in infeasible cells"));
    }
    out.pass = out.broken.is_empty();
    out.detail = format!("proven pairs {proven:?}: every feasible (a,b) hit");
    out
}

fn witness_summary(q: u64, m: usize, rep: &BinReport) -> String {
    let zero: u64 = rep.bins.iter().filter(|b| b.a == 0).map(|b| b.count).sum();
    let kind = if zero == rep.total { "all a=0" } else if zero == 0 { "a!=0 only" } else { "mixed a" };
    format!("m={m} q={q}: {} witnesses, {kind}", rep.total)
}

/// 11. Small-m nonexistence statements.
fn small_m() -> Outcome {
    let mut out = Outcome::default();
    let mut dev = Vec::new();
    let mut notes = Vec::new();
    for q in [2u64, 4, 5, 7, 11, 13] {
        let rep = count_all(q, 2, 3, 1).unwrap();
        // a witness for m = 2 has Tr(ξ⁻¹) = 0
        out.check(rep.nonzero().iter().all(|&(a, _)| a == 0), || format!("m=2 q={q}: witness with a != 0"));
        if q == 5 {
            out.check(rep.total > 0, || "m=2 q=5: no trace-zero witnesses".into());
        }
        if rep.total > 0 {
            dev.push(witness_summary(q, 2, &rep));
        }
    }
    for q in [4u64, 7, 13] {
        let rep = count_all(q, 3, 3, 1).unwrap();
        out.check(rep.bins.iter().filter(|b| b.a == 0).all(|b| b.count == 0), || format!("m=3 q={q}: a=0 witness"));
        if rep.total > 0 {
            dev.push(witness_summary(q, 3, &rep));
        }
    }
    for q in [3u64, 7, 5, 13] {
        let r = m4_necessary_condition_check(q).unwrap();
        out.check(r.holds_zero_trace, || format!("m=4 q={q}: a=0 witnesses violate the necessary condition"));
        notes.push(format!("m=4 q={q}: {} witnesses ({} with a=0)", r.total_witnesses, r.zero_trace_witnesses));
        if [3, 7].contains(&q) && r.total_witnesses > 0 {
            dev.push(witness_summary(q, 4, r.bins.as_ref().unwrap()));
        }
    }
    out.pass = dev.is_empty() && out.broken.is_empty();
    out.deviation = dev.join("; ");
    out.detail = format!("a=0 versions hold; {}", notes.join(", "));
    out
}

fn main() {
    let picked: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let criteria: Vec<(usize, &str, Box<dyn Fn() -> Outcome>)> = vec![
        (1, "coefficient identity", Box::new(coefficient_identity)),
        (2, "characteristic functions", Box::new(characteristic_functions)),
        (3, "orthogonality sum", Box::new(orthogonality_lemma)),
        (4, "structural lemmas", Box::new(structural_lemmas)),
        (5, "list q in {4,5,7}", Box::new(|| table_criterion(&[Preset::Q4q5q7]))),
        (6, "list q = 2", Box::new(|| table_criterion(&[Preset::Q2]))),
        (7, "lists m in 8..=11 and m = 7", Box::new(|| table_criterion(&[Preset::M8to11, Preset::M7]))),
        (8, "threshold tables and constants", Box::new(thresholds)),
        (9, "desk-scale enumeration", Box::new(desk_scale)),
        (10, "soundness at desk scale", Box::new(soundness)),
        (11, "small-m nonexistence", Box::new(small_m)),
    ];
    let mut unexpected = 0;
    for (n, name, run) in &criteria {
        if !picked.is_empty() && !picked.contains(n) {
            continue;
        }
        let t = Instant::now();
        let o = run();
        let secs = t.elapsed().as_secs_f64();
        let known = KNOWN_RED.iter().find(|(k, _)| k == n).map(|(_, d)| *d);
        let verdict = if o.pass { "PASS" } else { "FAIL" };
        println!("criterion {n:>2} {verdict}  {name} ({secs:.1}s): {}", o.detail);
        for b in &o.broken {
            println!("    broken: {b}");
        }
        if !o.deviation.is_empty() {
            println!("    literal statement: {}", o.deviation);
        }
        let ok = match (o.pass, known) {
            (true, None) => true,
            (true, Some(_)) => {
                println!("    listed in KNOWN_RED but passes; update the list");
                false
            }
            (false, Some(d)) if o.broken.is_empty() && o.deviation == d => {
                println!("    known deviation, unchanged");
                true
            }
            (false, _) => false,
        };
        if !ok {
            unexpected += 1;
        }
    }
    if unexpected > 0 {
        println!("{unexpected} criteria failed unexpectedly");
        std::process::exit(1);
    }
}
