#![allow(dead_code)]

use eigenframe::expr::{differentiate, parse_with, SymbolTable};
use eigenframe::geometry::{DomainBox, Frame, RiemannChart};

pub fn euler_frame(pressure: &str) -> (Frame, SymbolTable) {
    let vars = ["v", "u", "S"];
    let mut st = SymbolTable::new(&vars);
    let p = parse_with(pressure, &st).unwrap();
    let p_v = differentiate(&p, "v");
    st.add_alias("p_S", differentiate(&p, "S"));
    st.add_alias("p_v", p_v);
    st.add_alias("p", p);
    let comps = [["1", "-p_S", "1"], ["sqrt(-p_v)", "0", "-sqrt(-p_v)"], ["0", "p_v", "0"]];
    let r = comps.iter().map(|row| row.iter().map(|s| parse_with(s, &st).unwrap()).collect()).collect();
    let dom = DomainBox::new(vec![1.0, -1.0, 0.0], vec![2.0, 1.0, 1.0]).unwrap();
    let f = Frame::new(vars.iter().map(|s| s.to_string()).collect(), r, dom, vec![1.5, 0.0, 0.5]).unwrap();
    (f, st)
}

/// Builds a frame from its fields (each given as a component list).
pub fn frame_from_fields(fields: &[&[&str]], st: &SymbolTable, lo: &[f64], hi: &[f64], base: &[f64]) -> Frame {
    let n = fields.len();
    let r = (0..n)
        .map(|m| (0..n).map(|j| parse_with(fields[j][m], st).unwrap()).collect())
        .collect();
    let dom = DomainBox::new(lo.to_vec(), hi.to_vec()).unwrap();
    Frame::new(st.vars().to_vec(), r, dom, base.to_vec()).unwrap()
}

pub fn u_table(n: usize) -> SymbolTable {
    let vars: Vec<String> = (1..=n).map(|i| format!("u{i}")).collect();
    SymbolTable::new(&vars)
}

pub fn chart(w_vars: &[&str], rho: &[&str], u_st: &SymbolTable, rho_inv: &[&str], lo: &[f64], hi: &[f64], base: &[f64]) -> RiemannChart {
    let w_st = SymbolTable::new(w_vars);
    RiemannChart {
        w_vars: w_vars.iter().map(|s| s.to_string()).collect(),
        rho: rho.iter().map(|s| parse_with(s, u_st).unwrap()).collect(),
        rho_inv: rho_inv.iter().map(|s| parse_with(s, &w_st).unwrap()).collect(),
        w_box: DomainBox::new(lo.to_vec(), hi.to_vec()).unwrap(),
        w_base: base.to_vec(),
    }
}

pub fn eval_z(a: &eigenframe::analysis::Analysis, k: usize, i: usize, j: usize, w: &[f64]) -> f64 {
    let ch = a.chart.as_ref().unwrap();
    eigenframe::expr::Tape::compile(&[ch.z.z.get(k, i, j).clone()], &ch.z.w_vars)
        .unwrap()
        .eval_vec(w)
        .unwrap()[0]
}

pub fn spherical() -> (Frame, RiemannChart) {
    let mut st = u_table(3);
    for (name, text) in [
        ("r", "sqrt(u1^2+u2^2+u3^2)"),
        ("th", "arctan(sqrt(u1^2+u2^2)/u3)"),
        ("ph", "arctan(u2/u1)"),
    ] {
        let e = parse_with(text, &st).unwrap();
        st.add_alias(name, e);
    }
    let f = frame_from_fields(
        &[
            &["sin(th)*cos(ph)", "sin(th)*sin(ph)", "cos(th)"],
            &["r*cos(th)*cos(ph)", "r*cos(th)*sin(ph)", "-r*sin(th)"],
            &["-r*sin(th)*sin(ph)", "r*sin(th)*cos(ph)", "0"],
        ],
        &st,
        &[0.4, -0.2, 0.5],
        &[0.7, 0.2, 0.8],
        &[0.55, 0.0, 0.65],
    );
    let ch = chart(
        &["r", "th", "ph"],
        &["r", "th", "ph"],
        &st,
        &["r*sin(th)*cos(ph)", "r*sin(th)*sin(ph)", "r*cos(th)"],
        &[0.5, 0.3, -0.8],
        &[1.5, 1.3, 0.8],
        &[1.0, 0.8, 0.0],
    );
    (f, ch)
}

pub fn hyperbola() -> (Frame, RiemannChart) {
    let st = u_table(2);
    let f = frame_from_fields(
        &[&["1/(2*u2)", "1/(2*u1)"], &["-(u1^2)/(2*u2)", "u1/2"]],
        &st,
        &[1.2, 0.85],
        &[1.4, 1.1],
        &[1.3, 1.0],
    );
    let ch = chart(
        &["w1", "w2"],
        &["u1*u2", "u2/u1"],
        &st,
        &["sqrt(w1/w2)", "sqrt(w1*w2)"],
        &[1.0, 0.0],
        &[2.0, 1.0],
        &[1.0, 0.5],
    );
    (f, ch)
}

pub fn commuting_rank_one() -> (Frame, RiemannChart) {
    let st = u_table(3);
    let f = frame_from_fields(
        &[&["1", "0", "u2"], &["0", "1", "u1"], &["0", "0", "-1"]],
        &st,
        &[-1.0; 3],
        &[1.0; 3],
        &[0.0; 3],
    );
    let ch = chart(
        &["w1", "w2", "w3"],
        &["u1", "u2", "u1*u2-u3"],
        &st,
        &["w1", "w2", "w1*w2-w3"],
        &[-1.0, -1.0, -2.0],
        &[1.0, 1.0, 2.0],
        &[0.0, 0.0, 0.0],
    );
    (f, ch)
}

pub fn iib_nontrivial() -> Frame {
    frame_from_fields(
        &[&["0", "1", "0"], &["1", "0", "0"], &["u2", "u3", "1"]],
        &u_table(3),
        &[-0.5; 3],
        &[0.5; 3],
        &[0.0; 3],
    )
}
