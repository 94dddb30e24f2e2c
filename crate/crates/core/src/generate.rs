//! Fixture builders: the two example complexes, the K_3^4 substructures and
//! UCQs built from them, the appendix query families, stretched cliques and
//! random complexes. Each `*_files` function returns `(file name, contents)`.

use crate::error::{Error, Result};
use crate::io::{write_complex, write_database, write_query};
use crate::simplicial::{build_stretched_clique, layer, random_complex, Complex};
use crate::structure::{ConjunctiveQuery, Structure, Ucq};

pub type Files = Vec<(String, String)>;

pub fn delta1() -> Complex {
    Complex::new(
        &["1", "2", "3", "4"],
        &[
            vec!["2", "3", "4"],
            vec!["1", "2"],
            vec!["1", "3"],
            vec!["1", "4"],
        ],
    )
    .expect("valid complex")
}

pub fn delta2() -> Complex {
    Complex::new(
        &["1", "2", "3", "4"],
        &[vec!["1", "2"], vec!["2", "3"], vec!["1", "3"], vec!["4"]],
    )
    .expect("valid complex")
}

/// Union of the layers in `a` (1-based) of K_3^4, on the full universe.
pub fn s_a(a: &[usize]) -> Result<Structure> {
    let sc = build_stretched_clique(3, 4)?;
    let mut s = Structure::new(sc.structure.signature().clone());
    for n in sc.structure.names() {
        s.add_element(n);
    }
    for &i in a {
        for (r, t) in layer(&sc, i)?.tuples() {
            s.insert_tuple(r, t.clone())?;
        }
    }
    Ok(s)
}

fn ucq_of(parts: &[&[usize]]) -> Result<Ucq> {
    let disjuncts = parts.iter().map(|a| s_a(a)).collect::<Result<Vec<_>>>()?;
    let free = disjuncts[0].names().to_vec();
    Ucq::new(disjuncts, free)
}

/// `(S_1, S_34, S_24, S_23)`.
pub fn psi1() -> Result<Ucq> {
    ucq_of(&[&[1], &[3, 4], &[2, 4], &[2, 3]])
}

/// `(S_24, S_34, S_14, S_123)`.
pub fn psi2() -> Result<Ucq> {
    ucq_of(&[&[2, 4], &[3, 4], &[1, 4], &[1, 2, 3]])
}

pub fn figure1_files() -> Files {
    vec![
        ("delta1.cx".into(), write_complex(&delta1())),
        ("delta2.cx".into(), write_complex(&delta2())),
    ]
}

pub fn figure2_files() -> Result<Files> {
    let mut out = Files::new();
    for a in [&[1][..], &[2, 4], &[1, 4], &[3, 4], &[2, 3], &[1, 2, 3]] {
        let name: String = a.iter().map(|i| i.to_string()).collect();
        out.push((format!("s{name}.ucq"), write_query(&ucq_of(&[a])?)));
    }
    let k34 = s_a(&[1, 2, 3, 4])?;
    out.push(("k34.ucq".into(), write_query(&ucq_of(&[&[1, 2, 3, 4]])?)));
    out.push(("k34.db".into(), write_database(&k34)));
    out.push(("psi1.ucq".into(), write_query(&psi1()?)));
    out.push(("psi2.ucq".into(), write_query(&psi2()?)));
    Ok(out)
}

fn check_k(k: usize) -> Result<()> {
    if k < 2 {
        return Err(Error::precondition("appendix families need k >= 2"));
    }
    Ok(())
}

fn free_names(k: usize) -> Vec<String> {
    let mut f: Vec<String> = (1..=k).map(|i| format!("x{i}")).collect();
    f.push("xb".into());
    f
}

fn build(facts: &[(String, [String; 2])], free: &[String]) -> Result<Structure> {
    let mut s = Structure::from_facts(
        facts
            .iter()
            .map(|(r, [a, b])| (r.as_str(), vec![a.as_str(), b.as_str()])),
    )?;
    for f in free {
        s.add_element(f);
    }
    Ok(s)
}

/// `ψ_k = ∃y ∧_i E(x_i, xb) ∧ E(x_i, y)`.
pub fn appendix_psi(k: usize) -> Result<ConjunctiveQuery> {
    check_k(k)?;
    let mut facts = Vec::new();
    for i in 1..=k {
        facts.push(("E".to_string(), [format!("x{i}"), "xb".to_string()]));
        facts.push(("E".to_string(), [format!("x{i}"), "y".to_string()]));
    }
    let free = free_names(k);
    ConjunctiveQuery::new(build(&facts, &free)?, &free)
}

/// `φ_k^{i,j} = ∃y E_i(x_i, y) ∧ E_j(x_j, y) ∧ ∧_{l ∉ {i,j}} E_l(x_l, xb)`.
pub fn appendix_phi(k: usize, i: usize, j: usize) -> Result<ConjunctiveQuery> {
    check_k(k)?;
    if !(1 <= i && i < j && j <= k) {
        return Err(Error::precondition(format!("need 1 <= i < j <= {k}")));
    }
    let mut facts = Vec::new();
    for l in 1..=k {
        let target = if l == i || l == j { "y" } else { "xb" };
        facts.push((format!("E{l}"), [format!("x{l}"), target.to_string()]));
    }
    let free = free_names(k);
    ConjunctiveQuery::new(build(&facts, &free)?, &free)
}

/// `Ψ_k = ∨_{i<j} φ_k^{i,j}`.
pub fn appendix_phi_union(k: usize) -> Result<Ucq> {
    check_k(k)?;
    let mut disjuncts = Vec::new();
    for i in 1..=k {
        for j in i + 1..=k {
            disjuncts.push(appendix_phi(k, i, j)?.into_body());
        }
    }
    Ucq::aligned(disjuncts, free_names(k))
}

pub fn appendix_psi_files(k: usize) -> Result<Files> {
    let q = appendix_psi(k)?;
    Ok(vec![(format!("psi_k{k}.ucq"), write_query(&Ucq::single(&q)?))])
}

pub fn appendix_phi_files(k: usize, ij: Option<(usize, usize)>) -> Result<Files> {
    Ok(match ij {
        Some((i, j)) => vec![(
            format!("phi_k{k}_{i}_{j}.ucq"),
            write_query(&Ucq::single(&appendix_phi(k, i, j)?)?),
        )],
        None => vec![(format!("phi_k{k}.ucq"), write_query(&appendix_phi_union(k)?))],
    })
}

pub fn stretched_clique_files(t: usize, k: usize) -> Result<Files> {
    let sc = build_stretched_clique(t, k)?;
    let q = ConjunctiveQuery::quantifier_free(sc.structure.clone());
    Ok(vec![
        (format!("k{t}_{k}.ucq"), write_query(&Ucq::single(&q)?)),
        (format!("k{t}_{k}.db"), write_database(&sc.structure)),
    ])
}

pub fn random_complex_files(n: usize, seed: u64) -> Result<Files> {
    Ok(vec![(
        format!("random_n{n}_s{seed}.cx"),
        write_complex(&random_complex(n, seed)?),
    )])
}
