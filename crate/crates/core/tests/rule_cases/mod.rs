//! Accepted and rejected instantiations for every inference rule, shared by
//! the logic tests and the acceptance suite.

#![allow(dead_code)]

/// (rule, good bindings, expected instance written out by hand, bad bindings)
pub const SCHEMAS: &[(&str, &str, &str, &str)] = &[
    ("A1", "P:=a, phi:=x, psi:=y", "(a believes x and a believes (x -> y)) -> a believes y", "P:=a, phi:=enc{x}[k], psi:=y"),
    ("A2", "P:=a, phi:=fresh(n)", "a believes fresh(n) -> fresh(n)", "P:=a, phi:=(n, m)"),
    ("A3", "P:=a, phi:=x", "a believes x -> a believes (a believes x)", "P:=enc{x}[k], phi:=x"),
    ("A4", "P:=a, phi:=x", "not (a believes x) -> a believes (not (a believes x))", "P:=a, phi:=sig[x][k]"),
    (
        "A5",
        "P:=a, Q:=b, R:=c, k:=K, X:=n",
        "(a sharedkey[K] b and c received enc{n from(b)}[K]) -> (b said n and b has n)",
        "P:=a, Q:=b, R:=c, k:=(K, L), X:=n",
    ),
    (
        "A6",
        "Q:=b, R:=c, k:=K, X:=m, Y:=n",
        "(pk_sigma(b, K) and c received m and sv(m, K, n)) -> b said n",
        "Q:=b, R:=c, k:=sig[m][K], X:=m, Y:=n",
    ),
    (
        "A7",
        "P:=a, Q:=b, k:=Ka, k':=Kb",
        "(pk_delta(a, Ka) and pk_delta(b, Kb)) -> a sharedkey[f0(Ka, Kb)] b",
        "P:=a, Q:=b, k:=Ka",
    ),
    (
        "A8",
        "phi:=a sharedkey[f0(Ka, Kb)] b, k:=Ka, k':=Kb",
        "(a sharedkey[f0(Ka, Kb)] b -> a sharedkey[f0(Kb, Ka)] b) and (a sharedkey[f0(Kb, Ka)] b -> a sharedkey[f0(Ka, Kb)] b)",
        "phi:=f0(Ka, Kb), k:=Ka, k':=Kb",
    ),
    ("A9", "P:=a, X:=(m, n), i:=2", "a received (m, n) -> a received n", "P:=a, X:=(m, n), i:=3"),
    ("A10", "P:=a, X:=m, k:=K", "(a received enc{m}[K] and a has inv(K)) -> a received m", "P:=a, X:=m, k:=(m, n)"),
    ("A11", "P:=a, X:=m, k:=K", "a received sig[m][K] -> a received m", "P:=a, X:=m, k:=fresh(K)"),
    ("A12", "P:=a, X:=m", "a received m -> a has m", "P:=a, X:=m, Q:=b"),
    ("A13", "P:=a, X:=(m, n), i:=1", "a has (m, n) -> a has m", "P:=a, X:=m, i:=1"),
    ("A14", "P:=a, X:=(m, n), F:=h", "(a has m and a has n) -> a has h(m, n)", "P:=a, X:=(m, n), F:=enc{m}[K]"),
    ("A15", "P:=a, X:=m, F:=h", "a believes (a has h(m)) -> a believes (a has m)", "P:=a, X:=m"),
    ("A16", "P:=a, X:=(m, n), i:=2", "a said (m, n) -> (a said n and a has n)", "P:=a, X:=(m, n), i:=0"),
    ("A17", "P:=a, X:=(m, n), i:=1", "a says (m, n) -> (a said (m, n) and a says m)", "P:=a, X:=(m, n), i:=m"),
    ("A18", "X:=(m, n), i:=2", "fresh(n) -> fresh((m, n))", "X:=m, i:=1"),
    ("A19", "X:=m, F:=h", "fresh(m) -> fresh(h(m))", "X:=m, F:=(h, g)"),
    ("A20", "P:=a, phi:=x", "(a controls x and a says x) -> x", "P:=a, phi:=(x, y)"),
    ("A21", "P:=a, X:=n", "(fresh(n) and a said n) -> a says n", "P:=a"),
    (
        "A22",
        "P:=a, k:=K, Q:=b",
        "(a sharedkey[K] b -> b sharedkey[K] a) and (b sharedkey[K] a -> a sharedkey[K] b)",
        "P:=a, k:=fresh(K), Q:=b",
    ),
];

pub fn one_step(rule: &str, with: &str, concl: &str) -> String {
    format!("step S: {concl} ; by {rule} with {with}\ngoal: {concl}\n")
}

/// Modus ponens: cited premises in either order, and a wrong conclusion.
pub const MP_ACCEPT: &[&str] = &[
    "premise H1: a believes x\npremise H2: a believes x -> y\nstep S: y ; by MP from H1, H2\ngoal: y\n",
    "premise H1: a believes x\npremise H2: a believes x -> y\nstep S: y ; by MP from H2, H1\ngoal: y\n",
];
pub const MP_REJECT: &[&str] = &[
    "premise H1: a believes x\npremise H2: a believes x -> y\nstep S: x ; by MP from H1, H2\ngoal: x\n",
    "premise H1: a\nstep S: a ; by MP from H1\ngoal: a\n",
];

/// Necessitation: only of theorems, and only as a belief.
pub const NEC_ACCEPT: &[&str] = &[
    "step S1: a received m -> a has m ; by A12 with P:=a, X:=m\n\
     step S2: b believes (a received m -> a has m) ; by NEC from S1\n\
     goal: b believes (a received m -> a has m)\n",
];
pub const NEC_REJECT: &[&str] = &[
    "premise H: x\nstep S: b believes x ; by NEC from H\ngoal: b believes x\n",
    "step S1: a received m -> a has m ; by A12 with P:=a, X:=m\n\
     step S2: b says (a received m -> a has m) ; by NEC from S1\n\
     goal: b says (a received m -> a has m)\n",
];
