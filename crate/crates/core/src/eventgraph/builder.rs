//! Lowering of statements into event triples.
//!
//! Every expression evaluates to an [`Entity`]: leaves stay leaves, every
//! operator application emits a node and evaluates to a reference to it.
//! Children are always emitted before their parent, so the last node of a
//! statement is its root and all references point backwards.
//!
//! Def-use links are statement-granular. A read of a variable whose latest
//! write happened in an earlier statement becomes a reference to that
//! statement's final node. Writes inside a statement become visible when the
//! statement ends, including writes in nested branches and loop bodies.

use std::collections::HashMap;

use log::warn;

use super::types::*;
use super::GraphError;
use crate::cparse::{BinOp, Expr, ExprKind, Item, Literal, Stmt, StmtKind, TranslationUnit, UnaryOp};

/// Lowers a parsed fragment into its event dependency graph.
pub fn build_event_graph(tu: &TranslationUnit) -> Result<EventDependencyGraph, GraphError> {
    let mut b = Builder::default();
    let mut global_defs = HashMap::new();
    for item in &tu.items {
        match item {
            Item::Global(stmt) => {
                b.last_def = global_defs;
                b.top_level(stmt)?;
                global_defs = std::mem::take(&mut b.last_def);
            }
            Item::Function(f) => {
                b.last_def = global_defs.clone();
                b.current_fn = f.name.clone();
                for stmt in &f.body {
                    b.top_level(stmt)?;
                }
            }
        }
    }
    EventDependencyGraph::from_parts(b.nodes, b.stmt)
}

#[derive(Default)]
struct Builder {
    nodes: Vec<EventNode>,
    stmt: usize,
    last_def: HashMap<String, usize>,
    writes: Vec<String>,
    current_fn: String,
}

fn op(name: &str) -> Operator {
    Operator::named(name)
}

fn binop_name(op: BinOp) -> &'static str {
    use BinOp::*;
    match op {
        Add => "add",
        Sub => "sub",
        Mul => "mul",
        Div => "div",
        Mod => "mod",
        Lt => "lt",
        Gt => "gt",
        Le => "le",
        Ge => "ge",
        Eq => "eq",
        Ne => "ne",
        And => "and",
        Or => "or",
        BitAnd => "bitand",
        BitOr => "bitor",
        BitXor => "bitxor",
        Shl => "shl",
        Shr => "shr",
    }
}

fn unop_name(op: UnaryOp) -> &'static str {
    match op {
        UnaryOp::Neg => "neg",
        UnaryOp::Not => "not",
        UnaryOp::BitNot => "bitnot",
        UnaryOp::Deref => "deref",
        UnaryOp::AddrOf => "addr-of",
    }
}

/// Whitespace inside a char constant is spelled as a hex escape so the value
/// survives the whitespace-separated graph file format.
fn char_value(raw: &str) -> String {
    raw.chars()
        .map(|c| if c.is_whitespace() { format!("\\x{:02x}", c as u32) } else { c.to_string() })
        .collect()
}

fn literal_entity(lit: &Literal) -> Entity {
    match lit {
        Literal::Int(v) => Entity::leaf(LeafKind::ConstInt, v.clone()),
        Literal::Float(v) => Entity::leaf(LeafKind::ConstFloat, v.clone()),
        Literal::Str(v) => Entity::leaf(LeafKind::ConstStr, v.clone()),
        Literal::Char(v) => Entity::leaf(LeafKind::ConstChar, char_value(v)),
    }
}

impl Builder {
    fn emit(&mut self, a: Entity, operator: Operator, o: Entity) -> Entity {
        let id = self.nodes.len();
        self.nodes.push(EventNode { id, entity1: a, op: operator, entity2: o, stmt: self.stmt, is_final: false });
        Entity::NodeRef(id)
    }

    fn top_level(&mut self, stmt: &Stmt) -> Result<(), GraphError> {
        let first = self.nodes.len();
        self.writes.clear();
        self.stmt_value(stmt)?;
        if self.nodes.len() == first {
            warn!(
                "statement at line {} produces no events and is dropped",
                stmt.span.line
            );
            return Ok(());
        }
        let root = self.nodes.len() - 1;
        self.nodes[root].is_final = true;
        for name in self.writes.drain(..) {
            self.last_def.insert(name, root);
        }
        self.stmt += 1;
        Ok(())
    }

    /// Lowers a statement; `None` when it emitted no events.
    fn stmt_value(&mut self, stmt: &Stmt) -> Result<Option<Entity>, GraphError> {
        let first = self.nodes.len();
        let value = match &stmt.kind {
            StmtKind::Decl(decls) => {
                let mut parts = Vec::new();
                for d in decls {
                    if let Some(init) = &d.init {
                        let v = self.expr(init)?;
                        parts.push(self.emit(Entity::var(&d.name), op("decl-init"), v));
                        self.writes.push(d.name.clone());
                    }
                }
                self.fold(parts, "comma")
            }
            StmtKind::Expr(e) => Some(self.expr(e)?),
            StmtKind::Return(e) => {
                let v = match e {
                    Some(e) => self.expr(e)?,
                    None => Entity::func(&self.current_fn),
                };
                Some(self.emit(Entity::func(&self.current_fn), op("return"), v))
            }
            StmtKind::If { cond, then, els } => {
                let c = self.expr(cond)?;
                let t = self.stmt_value(then)?.unwrap_or_else(|| c.clone());
                let guard = self.emit(c, op("cond-guard"), t);
                match els {
                    Some(els) => {
                        let e = self.stmt_value(els)?.unwrap_or_else(|| guard.clone());
                        Some(self.emit(guard, op("branch-else"), e))
                    }
                    None => Some(guard),
                }
            }
            StmtKind::While { cond, body } => {
                let c = self.expr(cond)?;
                let b = self.stmt_value(body)?.unwrap_or_else(|| c.clone());
                Some(self.emit(c, op("loop-body"), b))
            }
            StmtKind::DoWhile { body, cond } => {
                let b = self.stmt_value(body)?;
                let c = self.expr(cond)?;
                let b = b.unwrap_or_else(|| c.clone());
                Some(self.emit(b, op("loop-body"), c))
            }
            StmtKind::For { init, cond, step, body } => {
                let init = match init {
                    Some(s) => self.stmt_value(s)?,
                    None => None,
                };
                let c = match cond {
                    Some(c) => self.expr(c)?,
                    None => Entity::leaf(LeafKind::ConstInt, "1"),
                };
                let mut tail: Vec<Entity> = self.stmt_value(body)?.into_iter().collect();
                if let Some(step) = step {
                    let mark = self.nodes.len();
                    let s = self.expr(step)?;
                    if self.nodes.len() > mark {
                        tail.push(s);
                    }
                }
                let b = self.fold(tail, "comma").unwrap_or_else(|| c.clone());
                let lp = self.emit(c, op("loop-body"), b);
                match init {
                    Some(i) => Some(self.emit(i, op("comma"), lp)),
                    None => Some(lp),
                }
            }
            StmtKind::Block(stmts) => {
                let mut parts = Vec::new();
                for s in stmts {
                    if let Some(v) = self.stmt_value(s)? {
                        parts.push(v);
                    }
                }
                self.fold(parts, "comma")
            }
            StmtKind::Break | StmtKind::Continue | StmtKind::Empty => None,
        };
        Ok(value.filter(|_| self.nodes.len() > first))
    }

    /// Left fold with a binary operator: `((v0 op v1) op v2) ...`.
    fn fold(&mut self, parts: Vec<Entity>, name: &str) -> Option<Entity> {
        let mut it = parts.into_iter();
        let first = it.next()?;
        Some(it.fold(first, |acc, v| self.emit(acc, op(name), v)))
    }

    fn read(&self, name: &str) -> Entity {
        match self.last_def.get(name) {
            Some(&f) => Entity::NodeRef(f),
            None => Entity::var(name),
        }
    }

    fn expr(&mut self, e: &Expr) -> Result<Entity, GraphError> {
        Ok(match &e.kind {
            ExprKind::Ident(name) => self.read(name),
            ExprKind::Literal(lit) => literal_entity(lit),
            ExprKind::Binary { op: b, lhs, rhs } => {
                let l = self.expr(lhs)?;
                let r = self.expr(rhs)?;
                self.emit(l, op(binop_name(*b)), r)
            }
            ExprKind::Unary { op: u, operand } => {
                let v = self.expr(operand)?;
                self.emit(v.clone(), op(unop_name(*u)), v)
            }
            ExprKind::Assign { target, value } => {
                let v = self.expr(value)?;
                let t = self.lvalue(target)?;
                self.emit(t, op("assign"), v)
            }
            ExprKind::Call { callee, args } => {
                let mut vals = Vec::with_capacity(args.len());
                for a in args {
                    vals.push(self.expr(a)?);
                }
                let (func, receiver) = match &callee.kind {
                    ExprKind::Ident(name) => (Entity::func(name), None),
                    ExprKind::Member { base, field, .. } => {
                        let recv = self.expr(base)?;
                        (Entity::func(field), Some(recv))
                    }
                    _ => {
                        return Err(GraphError::Unsupported {
                            line: e.span.line,
                            construct: "indirect call".into(),
                        })
                    }
                };
                // Arguments mix right to left: f(a, b, c) -> (a, parammix, (b, parammix, c)).
                let mut rev = vals.into_iter().rev();
                let args = rev.next().map(|last| rev.fold(last, |acc, v| self.emit(v, op("parammix"), acc)));
                let receiver = receiver.unwrap_or_else(|| func.clone());
                match args {
                    Some(a) => {
                        let p = self.emit(a, op("param"), func);
                        self.emit(p, op("invoke"), receiver)
                    }
                    None => self.emit(func, op("invoke"), receiver),
                }
            }
            ExprKind::Member { base, field, arrow } => {
                let b = self.expr(base)?;
                let name = if *arrow { "arrow" } else { "member" };
                self.emit(b, op(name), Entity::var(field))
            }
            ExprKind::Index { base, index } => {
                let b = self.expr(base)?;
                let i = self.expr(index)?;
                self.emit(b, op("index"), i)
            }
            ExprKind::SizeofType(ty) => {
                let t = Entity::leaf(LeafKind::ConstStr, ty.clone());
                self.emit(t.clone(), op("sizeof"), t)
            }
            ExprKind::SizeofExpr(inner) => {
                let v = self.expr(inner)?;
                self.emit(v.clone(), op("sizeof"), v)
            }
            ExprKind::Cast { ty, expr } => {
                let v = self.expr(expr)?;
                self.emit(Entity::leaf(LeafKind::ConstStr, ty.clone()), op("cast"), v)
            }
            ExprKind::Ternary { cond, then, els } => {
                let c = self.expr(cond)?;
                let t = self.expr(then)?;
                let g = self.emit(c, op("cond-guard"), t);
                let f = self.expr(els)?;
                self.emit(g, op("branch-else"), f)
            }
            ExprKind::Comma { lhs, rhs } => {
                let l = self.expr(lhs)?;
                let r = self.expr(rhs)?;
                self.emit(l, op("comma"), r)
            }
            ExprKind::InitList(elems) => {
                let mut parts = Vec::new();
                for el in elems {
                    parts.push(self.expr(el)?);
                }
                self.fold(parts, "comma").unwrap_or_else(|| Entity::leaf(LeafKind::ConstInt, "0"))
            }
        })
    }

    /// Assignment target. The root variable of a name, index or member
    /// target is recorded as written and appears as a plain leaf.
    fn lvalue(&mut self, e: &Expr) -> Result<Entity, GraphError> {
        Ok(match &e.kind {
            ExprKind::Ident(name) => {
                self.writes.push(name.clone());
                Entity::var(name)
            }
            ExprKind::Index { base, index } => {
                let b = self.lvalue(base)?;
                let i = self.expr(index)?;
                self.emit(b, op("index"), i)
            }
            ExprKind::Member { base, field, arrow } => {
                let b = self.lvalue(base)?;
                let name = if *arrow { "arrow" } else { "member" };
                self.emit(b, op(name), Entity::var(field))
            }
            _ => self.expr(e)?,
        })
    }
}
