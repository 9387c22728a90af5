//! Generated clone corpus: ten small algorithms, each rendered with renamed
//! variables, shuffled independent statements, different loop forms and
//! optional filler statements.

use std::collections::BTreeSet;

use eventclone::cparse::{tokenize, TokenKind};
use eventclone::numkernel::Rng;

const NAMES: &[&str] = &[
    "a", "b", "c", "k", "m", "n", "p", "q", "r", "s", "t", "u", "v", "w", "x", "y", "z", "cnt", "acc", "val", "num",
    "tmp", "res", "sum", "idx", "lim", "cur", "len", "tot", "ans",
];

#[derive(Clone, Copy)]
enum Loop {
    For,
    While,
    DoWhile,
}

struct Gen<'r> {
    rng: &'r mut Rng,
    names: Vec<&'static str>,
    used: usize,
}

impl Gen<'_> {
    fn name(&mut self) -> &'static str {
        let n = self.names[self.used];
        self.used += 1;
        n
    }

    fn coin(&mut self, p: f64) -> bool {
        self.rng.uniform(0.0, 1.0) < p
    }

    fn loop_form(&mut self) -> Loop {
        [Loop::For, Loop::While, Loop::DoWhile][self.rng.below(3)]
    }

    fn shuffled(&mut self, mut lines: Vec<String>) -> String {
        self.rng.shuffle(&mut lines);
        lines.join("\n")
    }

    fn inc(&mut self, v: &str) -> String {
        match self.rng.below(3) {
            0 => format!("{v}++"),
            1 => format!("{v} += 1"),
            _ => format!("{v} = {v} + 1"),
        }
    }

    fn acc(&mut self, target: &str, op: &str, rhs: &str) -> String {
        if self.coin(0.5) {
            format!("{target} {op}= {rhs};")
        } else {
            format!("{target} = {target} {op} {rhs};")
        }
    }

    /// A counted loop `for (i = start; cond; step) body`.
    fn counted(&mut self, i: &str, start: &str, cond: &str, body: &str) -> String {
        let step = self.inc(i);
        match self.loop_form() {
            Loop::For => format!("for ({i} = {start}; {cond}; {step}) {{\n{body}\n}}"),
            Loop::While => format!("{i} = {start};\nwhile ({cond}) {{\n{body}\n{step};\n}}"),
            Loop::DoWhile => format!("{i} = {start};\ndo {{\n{body}\n{step};\n}} while ({cond});"),
        }
    }

    /// A conditional loop without a counter.
    fn guarded(&mut self, cond: &str, body: &str) -> String {
        match self.loop_form() {
            Loop::For => format!("for (; {cond}; ) {{\n{body}\n}}"),
            Loop::While => format!("while ({cond}) {{\n{body}\n}}"),
            Loop::DoWhile => format!("do {{\n{body}\n}} while ({cond});"),
        }
    }

    fn filler(&mut self) -> String {
        if self.coin(0.3) {
            "printf(\"\\n\");".to_string()
        } else {
            String::new()
        }
    }
}

fn program(body: String) -> String {
    format!("#include <stdio.h>\nint main() {{\n{body}\nreturn 0;\n}}\n")
}

fn sum_to_n(g: &mut Gen) -> String {
    let (n, s, i) = (g.name(), g.name(), g.name());
    let decls = g.shuffled(vec![format!("int {n};"), format!("int {s} = 0;"), format!("int {i};")]);
    let body = g.acc(s, "+", i);
    let lp = g.counted(i, "1", &format!("{i} <= {n}"), &body);
    let f = g.filler();
    program(format!("{decls}\nscanf(\"%d\", &{n});\n{lp}\n{f}\nprintf(\"%d\\n\", {s});"))
}

fn factorial(g: &mut Gen) -> String {
    let (n, f, i) = (g.name(), g.name(), g.name());
    let decls = g.shuffled(vec![format!("int {n};"), format!("long {f} = 1;"), format!("int {i};")]);
    let body = g.acc(f, "*", i);
    let lp = g.counted(i, "2", &format!("{i} <= {n}"), &body);
    let fl = g.filler();
    program(format!("{decls}\nscanf(\"%d\", &{n});\n{lp}\n{fl}\nprintf(\"%ld\\n\", {f});"))
}

fn array_max(g: &mut Gen) -> String {
    let (a, n, i, m) = (g.name(), g.name(), g.name(), g.name());
    let decls = g.shuffled(vec![format!("int {a}[100];"), format!("int {n};"), format!("int {i};"), format!("int {m};")]);
    let read = g.counted(i, "0", &format!("{i} < {n}"), &format!("scanf(\"%d\", &{a}[{i}]);"));
    let cmp = if g.coin(0.5) {
        format!("if ({a}[{i}] > {m}) {m} = {a}[{i}];")
    } else {
        format!("if ({m} < {a}[{i}]) {{\n{m} = {a}[{i}];\n}}")
    };
    let scan = g.counted(i, "1", &format!("{i} < {n}"), &cmp);
    let f = g.filler();
    program(format!("{decls}\nscanf(\"%d\", &{n});\n{read}\n{m} = {a}[0];\n{scan}\n{f}\nprintf(\"%d\\n\", {m});"))
}

fn count_even(g: &mut Gen) -> String {
    let (n, x, c, i) = (g.name(), g.name(), g.name(), g.name());
    let decls = g.shuffled(vec![format!("int {n};"), format!("int {x};"), format!("int {c} = 0;"), format!("int {i};")]);
    let bump = g.inc(c);
    let test = if g.coin(0.5) { format!("{x} % 2 == 0") } else { format!("!({x} % 2)") };
    let body = format!("scanf(\"%d\", &{x});\nif ({test}) {bump};");
    let lp = g.counted(i, "0", &format!("{i} < {n}"), &body);
    let f = g.filler();
    program(format!("{decls}\nscanf(\"%d\", &{n});\n{lp}\n{f}\nprintf(\"%d\\n\", {c});"))
}

fn reverse_digits(g: &mut Gen) -> String {
    let (n, r) = (g.name(), g.name());
    let decls = g.shuffled(vec![format!("int {n};"), format!("int {r} = 0;")]);
    let body = if g.coin(0.5) {
        format!("{r} = {r} * 10 + {n} % 10;\n{n} = {n} / 10;")
    } else {
        format!("{r} = {r} * 10 + {n} % 10;\n{n} /= 10;")
    };
    let lp = g.guarded(&format!("{n} > 0"), &body);
    let f = g.filler();
    program(format!("{decls}\nscanf(\"%d\", &{n});\n{lp}\n{f}\nprintf(\"%d\\n\", {r});"))
}

fn gcd(g: &mut Gen) -> String {
    let (a, b, t) = (g.name(), g.name(), g.name());
    let decls = g.shuffled(vec![format!("int {a};"), format!("int {b};"), format!("int {t};")]);
    let body = format!("{t} = {a} % {b};\n{a} = {b};\n{b} = {t};");
    let lp = g.guarded(&format!("{b} != 0"), &body);
    let f = g.filler();
    program(format!("{decls}\nscanf(\"%d %d\", &{a}, &{b});\n{lp}\n{f}\nprintf(\"%d\\n\", {a});"))
}

fn fibonacci(g: &mut Gen) -> String {
    let (n, x, y, t, i) = (g.name(), g.name(), g.name(), g.name(), g.name());
    let decls = g.shuffled(vec![
        format!("int {n};"),
        format!("int {x} = 0;"),
        format!("int {y} = 1;"),
        format!("int {t};"),
        format!("int {i};"),
    ]);
    let body = format!("{t} = {x} + {y};\n{x} = {y};\n{y} = {t};");
    let lp = g.counted(i, "0", &format!("{i} < {n}"), &body);
    let f = g.filler();
    program(format!("{decls}\nscanf(\"%d\", &{n});\n{lp}\n{f}\nprintf(\"%d\\n\", {x});"))
}

fn power(g: &mut Gen) -> String {
    let (b, e, p, i) = (g.name(), g.name(), g.name(), g.name());
    let decls = g.shuffled(vec![format!("int {b};"), format!("int {e};"), format!("long {p} = 1;"), format!("int {i};")]);
    let body = g.acc(p, "*", b);
    let lp = g.counted(i, "0", &format!("{i} < {e}"), &body);
    let f = g.filler();
    program(format!("{decls}\nscanf(\"%d %d\", &{b}, &{e});\n{lp}\n{f}\nprintf(\"%ld\\n\", {p});"))
}

fn sum_squares(g: &mut Gen) -> String {
    let (n, s, i, x) = (g.name(), g.name(), g.name(), g.name());
    let decls = g.shuffled(vec![format!("int {n};"), format!("int {s} = 0;"), format!("int {i};"), format!("int {x};")]);
    let add = g.acc(s, "+", &format!("{x} * {x}"));
    let body = format!("scanf(\"%d\", &{x});\n{add}");
    let lp = g.counted(i, "0", &format!("{i} < {n}"), &body);
    let f = g.filler();
    program(format!("{decls}\nscanf(\"%d\", &{n});\n{lp}\n{f}\nprintf(\"%d\\n\", {s});"))
}

fn is_prime(g: &mut Gen) -> String {
    let (n, i, fl) = (g.name(), g.name(), g.name());
    let decls = g.shuffled(vec![format!("int {n};"), format!("int {i};"), format!("int {fl} = 1;")]);
    let body = format!("if ({n} % {i} == 0) {{\n{fl} = 0;\nbreak;\n}}");
    let lp = g.counted(i, "2", &format!("{i} * {i} <= {n}"), &body);
    let out = if g.coin(0.5) {
        format!("if ({fl}) printf(\"yes\\n\");\nelse printf(\"no\\n\");")
    } else {
        format!("printf(\"%s\\n\", {fl} ? \"yes\" : \"no\");")
    };
    let f = g.filler();
    program(format!("{decls}\nscanf(\"%d\", &{n});\n{lp}\n{f}\n{out}"))
}

type Template = fn(&mut Gen) -> String;

const TEMPLATES: [Template; 10] =
    [sum_to_n, factorial, array_max, count_even, reverse_digits, gcd, fibonacci, power, sum_squares, is_prime];

/// `(problem, fragment name, source)` for `per_problem` variants of each of the ten templates.
pub fn toy_corpus(per_problem: usize, seed: u64) -> Vec<(String, String, String)> {
    let root = Rng::new(seed);
    let mut out = Vec::new();
    for (p, template) in TEMPLATES.iter().enumerate() {
        for f in 0..per_problem {
            let mut rng = root.fork((p * 1000 + f) as u64);
            let mut names = NAMES.to_vec();
            rng.shuffle(&mut names);
            let mut g = Gen { rng: &mut rng, names, used: 0 };
            out.push((format!("p{p:02}"), format!("f{f:02}"), template(&mut g)));
        }
    }
    out
}

/// Jaccard similarity of the two fragments' token-text sets.
pub fn token_jaccard(a: &str, b: &str) -> f64 {
    let set = |s: &str| -> BTreeSet<String> {
        tokenize(s).unwrap().into_iter().filter(|t| t.kind != TokenKind::Punctuation).map(|t| t.text).collect()
    };
    let (x, y) = (set(a), set(b));
    let union = x.union(&y).count();
    if union == 0 {
        return 1.0;
    }
    x.intersection(&y).count() as f64 / union as f64
}
