//! Hand-written fragments and the two source transforms that must not move
//! a program vector: re-layout with comments, and consistent renaming.

use eventclone::cparse::{tokenize, Token, TokenKind};
use eventclone::numkernel::Rng;

pub const FRAGMENTS: [&str; 20] = [
    "int main() { int n, s = 0, i; scanf(\"%d\", &n); for (i = 1; i <= n; i++) s += i; printf(\"%d\\n\", s); return 0; }",
    "int main() { int a, b, t; scanf(\"%d %d\", &a, &b); while (b != 0) { t = a % b; a = b; b = t; } printf(\"%d\", a); return 0; }",
    "int main() { int x[100], n, i, m; scanf(\"%d\", &n); for (i = 0; i < n; i++) scanf(\"%d\", &x[i]); m = x[0]; for (i = 1; i < n; i++) if (x[i] > m) m = x[i]; printf(\"%d\", m); return 0; }",
    "long fact(int n) { long r = 1; while (n > 1) { r *= n; n--; } return r; }\nint main() { int k; scanf(\"%d\", &k); printf(\"%ld\", fact(k)); return 0; }",
    "int main() { int n, r = 0; scanf(\"%d\", &n); do { r = r * 10 + n % 10; n /= 10; } while (n > 0); printf(\"%d\", r); return 0; }",
    "struct pt { int x; int y; };\nint main() { struct pt p; p.x = 3; p.y = p.x * 2; printf(\"%d %d\", p.x, p.y); return 0; }",
    "int main() { char c = 'a'; int cnt = 0; while (c <= 'z') { if (c == 'e' || c == 'o') cnt++; c++; } printf(\"%d\", cnt); return 0; }",
    "int main() { int a = 5, b = 9; int hi = a > b ? a : b; int lo = a < b ? a : b; printf(\"%d %d\", hi, lo); return 0; }",
    "int sq(int v) { return v * v; }\nint main() { int i, tot = 0; for (i = 0; i < 10; i++) tot += sq(i); printf(\"%d\", tot); return 0; }",
    "int main() { double f = 1.5; int n = (int) f; double g = f * 2.0 - n; printf(\"%f\", g); return 0; }",
    "int main() { int bits = 0, v; scanf(\"%d\", &v); while (v) { bits += v & 1; v >>= 1; } printf(\"%d\", bits); return 0; }",
    "int main() { int q[10]; int i; for (i = 0; i < 10; i++) q[i] = i * i; int sz = sizeof(q) / sizeof(int); printf(\"%d %d\", q[9], sz); return 0; }",
    "int main() { int y; scanf(\"%d\", &y); if ((y % 4 == 0 && y % 100 != 0) || y % 400 == 0) printf(\"leap\"); else printf(\"common\"); return 0; }",
    "int main() { int fa = 0, fb = 1, tmp, k; for (k = 0; k < 20; k++) { tmp = fa + fb; fa = fb; fb = tmp; } printf(\"%d\", fa); return 0; }",
    "int g = 7;\nint main() { int h = g * 3; g = h - 1; printf(\"%d %d\", g, h); return 0; }",
    "int main() { int m[3][3]; int r, c, tr = 0; for (r = 0; r < 3; r++) for (c = 0; c < 3; c++) m[r][c] = r + c; for (r = 0; r < 3; r++) tr += m[r][r]; printf(\"%d\", tr); return 0; }",
    "int main() { int num, p = 1, d; scanf(\"%d\", &num); for (d = 2; d * d <= num; d++) { if (num % d == 0) { p = 0; break; } } printf(\"%s\", p ? \"yes\" : \"no\"); return 0; }",
    "int main() { int w = 0, x = 1; w = w | (x << 3); w = w ^ 5; w = ~w; printf(\"%d\", !w); return 0; }",
    "int main() { int cnt = 0, val; while (scanf(\"%d\", &val) == 1) { if (val < 0) continue; cnt = cnt + val; } printf(\"%d\", cnt); return 0; }",
    "int main() { int a = 1, b = 2, c = 3; a += b; b -= c; c *= a; a = (a + b) * (c - a) / 2; printf(\"%d %d %d\", a, b, c); return 0; }",
];

const SEPARATORS: &[&str] = &[" ", "  ", "\n", "\t", " /* note */ ", "/*x*/", " // trailing\n", "\n\n    ", "\r\n"];

/// Rejoins the tokens with random whitespace and comments between every pair.
pub fn relayout(src: &str, seed: u64) -> String {
    let mut rng = Rng::new(seed);
    let mut out = String::from("/* header comment */\n");
    for t in tokenize(src).unwrap() {
        out.push_str(&t.text);
        let sep = SEPARATORS[rng.below(SEPARATORS.len())];
        // `/` directly followed by `/*` would open a line comment.
        if t.text.ends_with('/') && sep.starts_with('/') {
            out.push(' ');
        }
        out.push_str(sep);
    }
    out
}

fn is_called(tokens: &[Token], i: usize) -> bool {
    tokens.get(i + 1).is_some_and(|t| t.text == "(")
}

/// Renames every non-function identifier. Sorted names map to sorted fresh
/// names, so ties in the frequency ranking resolve the same way.
pub fn rename(src: &str) -> String {
    let tokens = tokenize(src).unwrap();
    let functions: Vec<&str> = (0..tokens.len())
        .filter(|&i| tokens[i].kind == TokenKind::Identifier && is_called(&tokens, i))
        .map(|i| tokens[i].text.as_str())
        .collect();
    let mut names: Vec<&str> = tokens
        .iter()
        .filter(|t| t.kind == TokenKind::Identifier && !functions.contains(&t.text.as_str()))
        .map(|t| t.text.as_str())
        .collect();
    names.sort_unstable();
    names.dedup();
    tokens
        .iter()
        .map(|t| match names.binary_search(&t.text.as_str()) {
            Ok(i) if t.kind == TokenKind::Identifier => format!("id{i:03}"),
            _ => t.text.clone(),
        })
        .collect::<Vec<_>>()
        .join(" ")
}
