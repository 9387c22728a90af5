use super::ast::*;
use super::lexer::{Token, TokenKind};
use super::CParseError;

const TYPE_WORDS: &[&str] = &[
    "int", "char", "float", "double", "long", "short", "unsigned", "signed", "void", "const",
    "static", "extern", "register", "volatile", "auto", "inline", "struct", "union",
];

/// Builds a [`TranslationUnit`] from the token stream of one fragment.
pub fn parse(tokens: &[Token]) -> Result<TranslationUnit, CParseError> {
    let mut p = Parser { tokens, pos: 0 };
    p.translation_unit()
}

struct Parser<'t> {
    tokens: &'t [Token],
    pos: usize,
}

fn end_of(tok: &Token) -> (u32, u32) {
    (tok.line, tok.column + tok.text.chars().count() as u32 - 1)
}

impl<'t> Parser<'t> {
    fn peek(&self) -> Option<&'t Token> {
        self.tokens.get(self.pos)
    }

    fn peek_at(&self, n: usize) -> Option<&'t Token> {
        self.tokens.get(self.pos + n)
    }

    fn check(&self, text: &str) -> bool {
        self.peek().is_some_and(|t| {
            t.text == text && !matches!(t.kind, TokenKind::StringLiteral | TokenKind::CharLiteral)
        })
    }

    fn check_at(&self, n: usize, text: &str) -> bool {
        self.peek_at(n).is_some_and(|t| {
            t.text == text && !matches!(t.kind, TokenKind::StringLiteral | TokenKind::CharLiteral)
        })
    }

    fn bump(&mut self) -> &'t Token {
        let tok = &self.tokens[self.pos];
        self.pos += 1;
        tok
    }

    fn eat(&mut self, text: &str) -> bool {
        if self.check(text) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn error(&self, expected: &str) -> CParseError {
        match self.peek() {
            Some(tok) => CParseError::Syntax {
                line: tok.line,
                column: tok.column,
                expected: expected.to_string(),
                found: tok.text.clone(),
            },
            None => {
                let (line, column) = self.tokens.last().map(end_of).unwrap_or((1, 0));
                CParseError::Syntax {
                    line,
                    column: column + 1,
                    expected: expected.to_string(),
                    found: "end of input".to_string(),
                }
            }
        }
    }

    fn unsupported(&self, construct: &str) -> CParseError {
        let line = self.peek().or(self.tokens.last()).map(|t| t.line).unwrap_or(1);
        CParseError::Unsupported { line, construct: construct.to_string() }
    }

    fn expect(&mut self, text: &str) -> Result<&'t Token, CParseError> {
        if self.check(text) {
            Ok(self.bump())
        } else {
            Err(self.error(&format!("'{text}'")))
        }
    }

    fn ident(&mut self) -> Result<&'t Token, CParseError> {
        match self.peek() {
            Some(t) if t.kind == TokenKind::Identifier => Ok(self.bump()),
            _ => Err(self.error("identifier")),
        }
    }

    fn start_span(&self) -> Span {
        let tok = self.peek().or(self.tokens.last());
        tok.map(|t| Span { line: t.line, column: t.column, end_line: t.line, end_column: t.column })
            .unwrap_or_default()
    }

    fn finish(&self, start: Span) -> Span {
        let (end_line, end_column) = self.tokens[..self.pos].last().map(end_of).unwrap_or((start.line, start.column));
        Span { end_line, end_column, ..start }
    }

    fn at_type_start(&self) -> bool {
        self.at_type_start_at(0)
    }

    fn at_type_start_at(&self, n: usize) -> bool {
        self.peek_at(n).is_some_and(|t| t.kind == TokenKind::Keyword && TYPE_WORDS.contains(&t.text.as_str()))
    }

    fn reject_unsupported_keyword(&self) -> Result<(), CParseError> {
        if let Some(t) = self.peek().filter(|t| t.kind == TokenKind::Keyword) {
            match t.text.as_str() {
                "switch" | "case" | "default" => return Err(self.unsupported("switch")),
                "goto" => return Err(self.unsupported("goto")),
                "typedef" => return Err(self.unsupported("typedef")),
                "enum" => return Err(self.unsupported("enum")),
                _ => {}
            }
        }
        Ok(())
    }

    fn translation_unit(&mut self) -> Result<TranslationUnit, CParseError> {
        let start = self.start_span();
        let mut items = Vec::new();
        let mut global_index = 0;
        while self.peek().is_some() {
            if self.eat(";") {
                continue;
            }
            self.reject_unsupported_keyword()?;
            let item_start = self.start_span();
            let implicit_int = self.peek().is_some_and(|t| t.kind == TokenKind::Identifier) && self.check_at(1, "(");
            if !implicit_int {
                if !self.at_type_start() {
                    return Err(self.error("declaration or function definition"));
                }
                self.type_specifiers()?;
            }
            // A function definition is `name (` after the specifiers and any pointer stars.
            let mut n = 0;
            while self.check_at(n, "*") {
                n += 1;
            }
            let is_function = self.peek_at(n).is_some_and(|t| t.kind == TokenKind::Identifier) && self.check_at(n + 1, "(");
            if is_function {
                for _ in 0..n {
                    self.bump();
                }
                let name = self.ident()?.text.clone();
                let params = self.param_list()?;
                if self.eat(";") {
                    // Prototype: no events, no statement.
                    continue;
                }
                self.expect("{")?;
                let mut body = Vec::new();
                while !self.check("}") {
                    if self.peek().is_none() {
                        return Err(self.error("'}'"));
                    }
                    let mut stmt = self.statement()?;
                    stmt.index = Some(body.len());
                    body.push(stmt);
                }
                self.expect("}")?;
                items.push(Item::Function(FunctionDef { name, params, body, span: self.finish(item_start) }));
            } else if self.check(";") {
                // `struct S { ... };` and friends.
                self.bump();
            } else {
                let decls = self.declarator_list()?;
                self.expect(";")?;
                let stmt = Stmt { index: Some(global_index), kind: StmtKind::Decl(decls), span: self.finish(item_start) };
                global_index += 1;
                items.push(Item::Global(stmt));
            }
        }
        Ok(TranslationUnit { items, span: self.finish(start) })
    }

    /// Consumes declaration specifiers and returns them joined by spaces.
    fn type_specifiers(&mut self) -> Result<String, CParseError> {
        let mut words = Vec::new();
        while self.at_type_start() {
            let tok = self.bump();
            words.push(tok.text.clone());
            if tok.text == "struct" || tok.text == "union" {
                if let Some(t) = self.peek().filter(|t| t.kind == TokenKind::Identifier) {
                    words.push(t.text.clone());
                    self.bump();
                }
                if self.check("{") {
                    self.skip_braces()?;
                }
            }
        }
        if self.check("typedef") {
            return Err(self.unsupported("typedef"));
        }
        if words.is_empty() {
            return Err(self.error("type specifier"));
        }
        Ok(words.join(" "))
    }

    fn skip_braces(&mut self) -> Result<(), CParseError> {
        self.expect("{")?;
        let mut depth = 1;
        while depth > 0 {
            if self.peek().is_none() {
                return Err(self.error("'}'"));
            }
            let tok = self.bump();
            if tok.kind == TokenKind::Punctuation {
                match tok.text.as_str() {
                    "{" => depth += 1,
                    "}" => depth -= 1,
                    _ => {}
                }
            }
        }
        Ok(())
    }

    fn param_list(&mut self) -> Result<Vec<String>, CParseError> {
        self.expect("(")?;
        let mut params = Vec::new();
        if self.eat(")") {
            return Ok(params);
        }
        if self.check("void") && self.check_at(1, ")") {
            self.bump();
            self.bump();
            return Ok(params);
        }
        loop {
            if self.eat("...") {
                self.expect(")")?;
                return Ok(params);
            }
            self.type_specifiers()?;
            while self.eat("*") || self.eat("const") {}
            if self.check("(") {
                return Err(self.unsupported("function pointer"));
            }
            if let Some(t) = self.peek().filter(|t| t.kind == TokenKind::Identifier) {
                params.push(t.text.clone());
                self.bump();
            }
            while self.eat("[") {
                while !self.check("]") {
                    if self.peek().is_none() {
                        return Err(self.error("']'"));
                    }
                    self.bump();
                }
                self.expect("]")?;
            }
            if self.eat(")") {
                return Ok(params);
            }
            self.expect(",")?;
        }
    }

    fn declarator_list(&mut self) -> Result<Vec<Declarator>, CParseError> {
        let mut decls = vec![self.declarator()?];
        while self.eat(",") {
            decls.push(self.declarator()?);
        }
        Ok(decls)
    }

    fn declarator(&mut self) -> Result<Declarator, CParseError> {
        let start = self.start_span();
        while self.eat("*") || self.eat("const") {}
        if self.check("(") {
            return Err(self.unsupported("function pointer"));
        }
        let name = self.ident()?.text.clone();
        if self.check("(") {
            // Prototype inside a declaration list.
            self.param_list()?;
            return Ok(Declarator { name, init: None, span: self.finish(start) });
        }
        while self.eat("[") {
            if !self.check("]") {
                self.assignment()?;
            }
            self.expect("]")?;
        }
        let init = if self.eat("=") { Some(self.initializer()?) } else { None };
        Ok(Declarator { name, init, span: self.finish(start) })
    }

    fn initializer(&mut self) -> Result<Expr, CParseError> {
        if self.check("{") {
            let start = self.start_span();
            self.bump();
            let mut elems = Vec::new();
            while !self.check("}") {
                elems.push(self.initializer()?);
                if !self.eat(",") {
                    break;
                }
            }
            self.expect("}")?;
            Ok(Expr { kind: ExprKind::InitList(elems), span: self.finish(start) })
        } else {
            self.assignment()
        }
    }

    fn statement(&mut self) -> Result<Stmt, CParseError> {
        self.reject_unsupported_keyword()?;
        let start = self.start_span();
        let tok = self.peek().ok_or_else(|| self.error("statement"))?;
        if tok.kind == TokenKind::Identifier && self.check_at(1, ":") {
            return Err(self.unsupported("label"));
        }
        let kind = match tok.text.as_str() {
            "{" if tok.kind == TokenKind::Punctuation => {
                self.bump();
                let mut stmts = Vec::new();
                while !self.check("}") {
                    if self.peek().is_none() {
                        return Err(self.error("'}'"));
                    }
                    stmts.push(self.statement()?);
                }
                self.bump();
                StmtKind::Block(stmts)
            }
            ";" if tok.kind == TokenKind::Punctuation => {
                self.bump();
                StmtKind::Empty
            }
            "if" if tok.kind == TokenKind::Keyword => {
                self.bump();
                self.expect("(")?;
                let cond = self.expression()?;
                self.expect(")")?;
                let then = Box::new(self.statement()?);
                let els = if self.eat("else") { Some(Box::new(self.statement()?)) } else { None };
                StmtKind::If { cond, then, els }
            }
            "while" if tok.kind == TokenKind::Keyword => {
                self.bump();
                self.expect("(")?;
                let cond = self.expression()?;
                self.expect(")")?;
                let body = Box::new(self.statement()?);
                StmtKind::While { cond, body }
            }
            "do" if tok.kind == TokenKind::Keyword => {
                self.bump();
                let body = Box::new(self.statement()?);
                self.expect("while")?;
                self.expect("(")?;
                let cond = self.expression()?;
                self.expect(")")?;
                self.expect(";")?;
                StmtKind::DoWhile { body, cond }
            }
            "for" if tok.kind == TokenKind::Keyword => {
                self.bump();
                self.expect("(")?;
                let init = if self.eat(";") {
                    None
                } else if self.at_type_start() {
                    let init_start = self.start_span();
                    self.type_specifiers()?;
                    let decls = self.declarator_list()?;
                    self.expect(";")?;
                    Some(Box::new(Stmt { index: None, kind: StmtKind::Decl(decls), span: self.finish(init_start) }))
                } else {
                    let init_start = self.start_span();
                    let e = self.expression()?;
                    self.expect(";")?;
                    Some(Box::new(Stmt { index: None, kind: StmtKind::Expr(e), span: self.finish(init_start) }))
                };
                let cond = if self.check(";") { None } else { Some(self.expression()?) };
                self.expect(";")?;
                let step = if self.check(")") { None } else { Some(self.expression()?) };
                self.expect(")")?;
                let body = Box::new(self.statement()?);
                StmtKind::For { init, cond, step, body }
            }
            "return" if tok.kind == TokenKind::Keyword => {
                self.bump();
                let value = if self.check(";") { None } else { Some(self.expression()?) };
                self.expect(";")?;
                StmtKind::Return(value)
            }
            "break" if tok.kind == TokenKind::Keyword => {
                self.bump();
                self.expect(";")?;
                StmtKind::Break
            }
            "continue" if tok.kind == TokenKind::Keyword => {
                self.bump();
                self.expect(";")?;
                StmtKind::Continue
            }
            _ if self.at_type_start() => {
                self.type_specifiers()?;
                if self.eat(";") {
                    StmtKind::Decl(Vec::new())
                } else {
                    let decls = self.declarator_list()?;
                    self.expect(";")?;
                    StmtKind::Decl(decls)
                }
            }
            _ => {
                let e = self.expression()?;
                self.expect(";")?;
                StmtKind::Expr(e)
            }
        };
        Ok(Stmt { index: None, kind, span: self.finish(start) })
    }

    fn expression(&mut self) -> Result<Expr, CParseError> {
        let mut lhs = self.assignment()?;
        while self.eat(",") {
            let rhs = self.assignment()?;
            let span = lhs.span.to(rhs.span);
            lhs = Expr { kind: ExprKind::Comma { lhs: Box::new(lhs), rhs: Box::new(rhs) }, span };
        }
        Ok(lhs)
    }

    fn assignment(&mut self) -> Result<Expr, CParseError> {
        let lhs = self.conditional()?;
        let Some(tok) = self.peek().filter(|t| t.kind == TokenKind::Operator) else {
            return Ok(lhs);
        };
        let compound = match tok.text.as_str() {
            "=" => None,
            "+=" | "-=" | "*=" | "/=" | "%=" | "&=" | "|=" | "^=" | "<<=" | ">>=" => {
                BinOp::from_symbol(&tok.text[..tok.text.len() - 1])
            }
            _ => return Ok(lhs),
        };
        self.bump();
        let rhs = self.assignment()?;
        let span = lhs.span.to(rhs.span);
        let value = match compound {
            None => rhs,
            Some(op) => Expr {
                kind: ExprKind::Binary { op, lhs: Box::new(lhs.clone()), rhs: Box::new(rhs) },
                span,
            },
        };
        Ok(Expr { kind: ExprKind::Assign { target: Box::new(lhs), value: Box::new(value) }, span })
    }

    fn conditional(&mut self) -> Result<Expr, CParseError> {
        let cond = self.binary(0)?;
        if !self.eat("?") {
            return Ok(cond);
        }
        let then = self.expression()?;
        self.expect(":")?;
        let els = self.conditional()?;
        let span = cond.span.to(els.span);
        Ok(Expr { kind: ExprKind::Ternary { cond: Box::new(cond), then: Box::new(then), els: Box::new(els) }, span })
    }

    fn binary(&mut self, min_prec: u8) -> Result<Expr, CParseError> {
        let mut lhs = self.unary()?;
        loop {
            let Some((op, prec)) = self
                .peek()
                .filter(|t| t.kind == TokenKind::Operator)
                .and_then(|t| BinOp::from_symbol(&t.text))
                .map(|op| (op, precedence(op)))
            else {
                break;
            };
            if prec < min_prec {
                break;
            }
            self.bump();
            let rhs = self.binary(prec + 1)?;
            let span = lhs.span.to(rhs.span);
            lhs = Expr { kind: ExprKind::Binary { op, lhs: Box::new(lhs), rhs: Box::new(rhs) }, span };
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr, CParseError> {
        let start = self.start_span();
        let tok = self.peek().ok_or_else(|| self.error("expression"))?;
        if tok.kind == TokenKind::Operator {
            let op = match tok.text.as_str() {
                "-" => Some(UnaryOp::Neg),
                "!" => Some(UnaryOp::Not),
                "~" => Some(UnaryOp::BitNot),
                "*" => Some(UnaryOp::Deref),
                "&" => Some(UnaryOp::AddrOf),
                _ => None,
            };
            if let Some(op) = op {
                self.bump();
                let operand = self.unary()?;
                return Ok(Expr { kind: ExprKind::Unary { op, operand: Box::new(operand) }, span: self.finish(start) });
            }
            if tok.text == "+" {
                self.bump();
                return self.unary();
            }
            if tok.text == "++" || tok.text == "--" {
                self.bump();
                let operand = self.unary()?;
                let span = self.finish(start);
                return Ok(increment(operand, tok.text == "++", span));
            }
        }
        if tok.is(TokenKind::Keyword, "sizeof") {
            self.bump();
            if self.check("(") && self.at_type_start_at(1) {
                self.bump();
                let ty = self.type_name()?;
                self.expect(")")?;
                return Ok(Expr { kind: ExprKind::SizeofType(ty), span: self.finish(start) });
            }
            let operand = self.unary()?;
            return Ok(Expr { kind: ExprKind::SizeofExpr(Box::new(operand)), span: self.finish(start) });
        }
        if self.check("(") && self.at_type_start_at(1) {
            self.bump();
            let ty = self.type_name()?;
            self.expect(")")?;
            let expr = self.unary()?;
            return Ok(Expr { kind: ExprKind::Cast { ty, expr: Box::new(expr) }, span: self.finish(start) });
        }
        self.postfix()
    }

    fn type_name(&mut self) -> Result<String, CParseError> {
        let mut ty = self.type_specifiers()?;
        while self.eat("*") {
            ty.push_str(" *");
        }
        if self.check("(") {
            return Err(self.unsupported("function pointer"));
        }
        Ok(ty)
    }

    fn postfix(&mut self) -> Result<Expr, CParseError> {
        let start = self.start_span();
        let mut e = self.primary()?;
        loop {
            if self.eat("[") {
                let index = self.expression()?;
                self.expect("]")?;
                e = Expr { kind: ExprKind::Index { base: Box::new(e), index: Box::new(index) }, span: self.finish(start) };
            } else if self.eat("(") {
                let mut args = Vec::new();
                if !self.check(")") {
                    loop {
                        args.push(self.assignment()?);
                        if !self.eat(",") {
                            break;
                        }
                    }
                }
                self.expect(")")?;
                e = Expr { kind: ExprKind::Call { callee: Box::new(e), args }, span: self.finish(start) };
            } else if self.check(".") || self.check("->") {
                let arrow = self.bump().text == "->";
                let field = self.ident()?.text.clone();
                e = Expr { kind: ExprKind::Member { base: Box::new(e), field, arrow }, span: self.finish(start) };
            } else if self.check("++") || self.check("--") {
                let inc = self.bump().text == "++";
                let span = self.finish(start);
                e = increment(e, inc, span);
            } else {
                return Ok(e);
            }
        }
    }

    fn primary(&mut self) -> Result<Expr, CParseError> {
        let start = self.start_span();
        let tok = self.peek().ok_or_else(|| self.error("expression"))?;
        let kind = match tok.kind {
            TokenKind::Identifier => {
                self.bump();
                ExprKind::Ident(tok.text.clone())
            }
            TokenKind::IntLiteral => {
                self.bump();
                ExprKind::Literal(Literal::Int(tok.text.clone()))
            }
            TokenKind::FloatLiteral => {
                self.bump();
                ExprKind::Literal(Literal::Float(tok.text.clone()))
            }
            TokenKind::CharLiteral => {
                self.bump();
                ExprKind::Literal(Literal::Char(strip_quotes(&tok.text).to_string()))
            }
            TokenKind::StringLiteral => {
                // Adjacent literals concatenate.
                let mut text = String::new();
                while let Some(t) = self.peek().filter(|t| t.kind == TokenKind::StringLiteral) {
                    text.push_str(strip_quotes(&t.text));
                    self.bump();
                }
                ExprKind::Literal(Literal::Str(text))
            }
            TokenKind::Punctuation if tok.text == "(" => {
                self.bump();
                let inner = self.expression()?;
                self.expect(")")?;
                return Ok(Expr { kind: inner.kind, span: self.finish(start) });
            }
            _ => return Err(self.error("expression")),
        };
        Ok(Expr { kind, span: self.finish(start) })
    }
}

fn strip_quotes(text: &str) -> &str {
    &text[1..text.len() - 1]
}

fn precedence(op: BinOp) -> u8 {
    use BinOp::*;
    match op {
        Or => 1,
        And => 2,
        BitOr => 3,
        BitXor => 4,
        BitAnd => 5,
        Eq | Ne => 6,
        Lt | Gt | Le | Ge => 7,
        Shl | Shr => 8,
        Add | Sub => 9,
        Mul | Div | Mod => 10,
    }
}

/// `x++` / `++x` / `x--` / `--x` become `x = x + 1` / `x = x - 1`.
fn increment(target: Expr, inc: bool, span: Span) -> Expr {
    let op = if inc { BinOp::Add } else { BinOp::Sub };
    let one = Expr { kind: ExprKind::Literal(Literal::Int("1".into())), span };
    let value = Expr { kind: ExprKind::Binary { op, lhs: Box::new(target.clone()), rhs: Box::new(one) }, span };
    Expr { kind: ExprKind::Assign { target: Box::new(target), value: Box::new(value) }, span }
}
