use std::fmt::Write;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Span {
    pub line: u32,
    pub column: u32,
    pub end_line: u32,
    pub end_column: u32,
}

impl Span {
    pub fn to(self, other: Span) -> Span {
        Span { line: self.line, column: self.column, end_line: other.end_line, end_column: other.end_column }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TranslationUnit {
    pub items: Vec<Item>,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Item {
    Function(FunctionDef),
    /// A file-scope declaration; carries a statement index in the file-scope numbering.
    Global(Stmt),
}

#[derive(Debug, Clone, PartialEq)]
pub struct FunctionDef {
    pub name: String,
    pub params: Vec<String>,
    pub body: Vec<Stmt>,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Stmt {
    /// Position among the top-level statements of the enclosing body.
    /// `None` for statements nested inside another statement.
    pub index: Option<usize>,
    pub kind: StmtKind,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Declarator {
    pub name: String,
    pub init: Option<Expr>,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq)]
pub enum StmtKind {
    Decl(Vec<Declarator>),
    Expr(Expr),
    Return(Option<Expr>),
    If { cond: Expr, then: Box<Stmt>, els: Option<Box<Stmt>> },
    While { cond: Expr, body: Box<Stmt> },
    DoWhile { body: Box<Stmt>, cond: Expr },
    For { init: Option<Box<Stmt>>, cond: Option<Expr>, step: Option<Expr>, body: Box<Stmt> },
    Block(Vec<Stmt>),
    Break,
    Continue,
    Empty,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Mod,
    Lt,
    Gt,
    Le,
    Ge,
    Eq,
    Ne,
    And,
    Or,
    BitAnd,
    BitOr,
    BitXor,
    Shl,
    Shr,
}

impl BinOp {
    pub fn from_symbol(sym: &str) -> Option<BinOp> {
        use BinOp::*;
        Some(match sym {
            "+" => Add,
            "-" => Sub,
            "*" => Mul,
            "/" => Div,
            "%" => Mod,
            "<" => Lt,
            ">" => Gt,
            "<=" => Le,
            ">=" => Ge,
            "==" => Eq,
            "!=" => Ne,
            "&&" => And,
            "||" => Or,
            "&" => BitAnd,
            "|" => BitOr,
            "^" => BitXor,
            "<<" => Shl,
            ">>" => Shr,
            _ => return None,
        })
    }

    pub fn symbol(self) -> &'static str {
        use BinOp::*;
        match self {
            Add => "+",
            Sub => "-",
            Mul => "*",
            Div => "/",
            Mod => "%",
            Lt => "<",
            Gt => ">",
            Le => "<=",
            Ge => ">=",
            Eq => "==",
            Ne => "!=",
            And => "&&",
            Or => "||",
            BitAnd => "&",
            BitOr => "|",
            BitXor => "^",
            Shl => "<<",
            Shr => ">>",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum UnaryOp {
    Neg,
    Not,
    BitNot,
    Deref,
    AddrOf,
}

impl UnaryOp {
    pub fn symbol(self) -> &'static str {
        match self {
            UnaryOp::Neg => "-",
            UnaryOp::Not => "!",
            UnaryOp::BitNot => "~",
            UnaryOp::Deref => "*",
            UnaryOp::AddrOf => "&",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Literal {
    Int(String),
    Float(String),
    /// Raw contents between the quotes, escapes left as written.
    Str(String),
    Char(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Expr {
    pub kind: ExprKind,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ExprKind {
    Ident(String),
    Literal(Literal),
    Binary { op: BinOp, lhs: Box<Expr>, rhs: Box<Expr> },
    Unary { op: UnaryOp, operand: Box<Expr> },
    /// Compound assignments and `++`/`--` arrive here already desugared.
    Assign { target: Box<Expr>, value: Box<Expr> },
    Call { callee: Box<Expr>, args: Vec<Expr> },
    Member { base: Box<Expr>, field: String, arrow: bool },
    Index { base: Box<Expr>, index: Box<Expr> },
    SizeofType(String),
    SizeofExpr(Box<Expr>),
    Cast { ty: String, expr: Box<Expr> },
    Ternary { cond: Box<Expr>, then: Box<Expr>, els: Box<Expr> },
    Comma { lhs: Box<Expr>, rhs: Box<Expr> },
    InitList(Vec<Expr>),
}

impl TranslationUnit {
    /// Indented s-expression dump, one node per line.
    pub fn to_sexpr(&self) -> String {
        let mut out = String::new();
        line(&mut out, 0, "translation-unit", self.span, None);
        for item in &self.items {
            match item {
                Item::Function(f) => {
                    let head = format!("function-def {} ({})", f.name, f.params.join(" "));
                    line(&mut out, 1, &head, f.span, None);
                    line(&mut out, 2, "block", f.span, None);
                    for s in &f.body {
                        dump_stmt(&mut out, 3, s);
                    }
                }
                Item::Global(s) => dump_stmt(&mut out, 1, s),
            }
        }
        out
    }
}

fn line(out: &mut String, depth: usize, head: &str, span: Span, index: Option<usize>) {
    let idx = index.map(|i| format!(" #{i}")).unwrap_or_default();
    let _ = writeln!(
        out,
        "{}({}{} @{}:{}-{}:{})",
        "  ".repeat(depth),
        head,
        idx,
        span.line,
        span.column,
        span.end_line,
        span.end_column
    );
}

fn dump_stmt(out: &mut String, depth: usize, s: &Stmt) {
    let d = depth + 1;
    match &s.kind {
        StmtKind::Decl(decls) => {
            line(out, depth, "declaration", s.span, s.index);
            for decl in decls {
                line(out, d, &format!("declarator {}", decl.name), decl.span, None);
                if let Some(init) = &decl.init {
                    dump_expr(out, d + 1, init);
                }
            }
        }
        StmtKind::Expr(e) => {
            line(out, depth, "expr-stmt", s.span, s.index);
            dump_expr(out, d, e);
        }
        StmtKind::Return(e) => {
            line(out, depth, "return", s.span, s.index);
            if let Some(e) = e {
                dump_expr(out, d, e);
            }
        }
        StmtKind::If { cond, then, els } => {
            line(out, depth, "if", s.span, s.index);
            dump_expr(out, d, cond);
            dump_stmt(out, d, then);
            if let Some(els) = els {
                dump_stmt(out, d, els);
            }
        }
        StmtKind::While { cond, body } => {
            line(out, depth, "while", s.span, s.index);
            dump_expr(out, d, cond);
            dump_stmt(out, d, body);
        }
        StmtKind::DoWhile { body, cond } => {
            line(out, depth, "do-while", s.span, s.index);
            dump_stmt(out, d, body);
            dump_expr(out, d, cond);
        }
        StmtKind::For { init, cond, step, body } => {
            line(out, depth, "for", s.span, s.index);
            match init {
                Some(init) => dump_stmt(out, d, init),
                None => line(out, d, "empty", s.span, None),
            }
            for e in [cond, step] {
                match e {
                    Some(e) => dump_expr(out, d, e),
                    None => line(out, d, "empty", s.span, None),
                }
            }
            dump_stmt(out, d, body);
        }
        StmtKind::Block(stmts) => {
            line(out, depth, "block", s.span, s.index);
            for s in stmts {
                dump_stmt(out, d, s);
            }
        }
        StmtKind::Break => line(out, depth, "break", s.span, s.index),
        StmtKind::Continue => line(out, depth, "continue", s.span, s.index),
        StmtKind::Empty => line(out, depth, "empty", s.span, s.index),
    }
}

fn dump_expr(out: &mut String, depth: usize, e: &Expr) {
    let d = depth + 1;
    match &e.kind {
        ExprKind::Ident(name) => line(out, depth, &format!("identifier {name}"), e.span, None),
        ExprKind::Literal(lit) => {
            let text = match lit {
                Literal::Int(v) | Literal::Float(v) => v.clone(),
                Literal::Str(v) => format!("\"{v}\""),
                Literal::Char(v) => format!("'{v}'"),
            };
            line(out, depth, &format!("literal {text}"), e.span, None)
        }
        ExprKind::Binary { op, lhs, rhs } => {
            line(out, depth, &format!("binary-op {}", op.symbol()), e.span, None);
            dump_expr(out, d, lhs);
            dump_expr(out, d, rhs);
        }
        ExprKind::Unary { op, operand } => {
            line(out, depth, &format!("unary-op {}", op.symbol()), e.span, None);
            dump_expr(out, d, operand);
        }
        ExprKind::Assign { target, value } => {
            line(out, depth, "assignment", e.span, None);
            dump_expr(out, d, target);
            dump_expr(out, d, value);
        }
        ExprKind::Call { callee, args } => {
            line(out, depth, "call", e.span, None);
            dump_expr(out, d, callee);
            for a in args {
                dump_expr(out, d, a);
            }
        }
        ExprKind::Member { base, field, arrow } => {
            let sym = if *arrow { "->" } else { "." };
            line(out, depth, &format!("member-access {sym}{field}"), e.span, None);
            dump_expr(out, d, base);
        }
        ExprKind::Index { base, index } => {
            line(out, depth, "index", e.span, None);
            dump_expr(out, d, base);
            dump_expr(out, d, index);
        }
        ExprKind::SizeofType(ty) => line(out, depth, &format!("sizeof type {ty}"), e.span, None),
        ExprKind::SizeofExpr(inner) => {
            line(out, depth, "sizeof", e.span, None);
            dump_expr(out, d, inner);
        }
        ExprKind::Cast { ty, expr } => {
            line(out, depth, &format!("cast {ty}"), e.span, None);
            dump_expr(out, d, expr);
        }
        ExprKind::Ternary { cond, then, els } => {
            line(out, depth, "conditional", e.span, None);
            dump_expr(out, d, cond);
            dump_expr(out, d, then);
            dump_expr(out, d, els);
        }
        ExprKind::Comma { lhs, rhs } => {
            line(out, depth, "comma", e.span, None);
            dump_expr(out, d, lhs);
            dump_expr(out, d, rhs);
        }
        ExprKind::InitList(elems) => {
            line(out, depth, "init-list", e.span, None);
            for el in elems {
                dump_expr(out, d, el);
            }
        }
    }
}
