use super::CParseError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TokenKind {
    Identifier,
    Keyword,
    IntLiteral,
    FloatLiteral,
    StringLiteral,
    CharLiteral,
    Operator,
    Punctuation,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub kind: TokenKind,
    pub text: String,
    pub line: u32,
    pub column: u32,
}

impl Token {
    pub fn is(&self, kind: TokenKind, text: &str) -> bool {
        self.kind == kind && self.text == text
    }
}

pub const KEYWORDS: &[&str] = &[
    "auto", "break", "case", "char", "const", "continue", "default", "do", "double", "else",
    "enum", "extern", "float", "for", "goto", "if", "inline", "int", "long", "register",
    "return", "short", "signed", "sizeof", "static", "struct", "switch", "typedef", "union",
    "unsigned", "void", "volatile", "while",
];

// Longest first so maximal munch falls out of a linear scan.
const OPERATORS: &[&str] = &[
    "<<=", ">>=", "...", "->", "++", "--", "<<", ">>", "<=", ">=", "==", "!=", "&&", "||", "+=",
    "-=", "*=", "/=", "%=", "&=", "|=", "^=", "+", "-", "*", "/", "%", "<", ">", "=", "!", "~",
    "&", "|", "^", "?", ":", ".",
];

const PUNCTUATION: &[char] = &['(', ')', '{', '}', '[', ']', ';', ','];

struct Cursor<'a> {
    chars: Vec<char>,
    pos: usize,
    line: u32,
    column: u32,
    _src: &'a str,
}

impl<'a> Cursor<'a> {
    fn new(src: &'a str) -> Self {
        Cursor { chars: src.chars().collect(), pos: 0, line: 1, column: 1, _src: src }
    }

    fn peek(&self) -> Option<char> {
        self.chars.get(self.pos).copied()
    }

    fn peek_at(&self, offset: usize) -> Option<char> {
        self.chars.get(self.pos + offset).copied()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.pos += 1;
        if c == '\n' {
            self.line += 1;
            self.column = 1;
        } else {
            self.column += 1;
        }
        Some(c)
    }

    fn starts_with(&self, s: &str) -> bool {
        s.chars().enumerate().all(|(i, c)| self.peek_at(i) == Some(c))
    }

    fn error(&self, line: u32, column: u32, message: impl Into<String>) -> CParseError {
        CParseError::Lex { line, column, message: message.into() }
    }
}

/// Splits C source into tokens. Comments, whitespace and preprocessor lines
/// never produce tokens.
pub fn tokenize(source: &str) -> Result<Vec<Token>, CParseError> {
    let mut cur = Cursor::new(source);
    let mut tokens = Vec::new();
    // True while only whitespace has been seen on the current line.
    let mut line_start = true;

    while let Some(c) = cur.peek() {
        if c == '\n' {
            cur.bump();
            line_start = true;
            continue;
        }
        if c.is_whitespace() {
            cur.bump();
            continue;
        }
        let (line, column) = (cur.line, cur.column);

        if c == '#' && line_start {
            skip_directive(&mut cur);
            continue;
        }
        line_start = false;

        if cur.starts_with("//") {
            while let Some(c) = cur.peek() {
                if c == '\n' {
                    break;
                }
                cur.bump();
            }
            continue;
        }
        if cur.starts_with("/*") {
            cur.bump();
            cur.bump();
            loop {
                if cur.starts_with("*/") {
                    cur.bump();
                    cur.bump();
                    break;
                }
                if cur.bump().is_none() {
                    return Err(cur.error(line, column, "unterminated block comment"));
                }
            }
            continue;
        }

        let (kind, text) = if c.is_ascii_alphabetic() || c == '_' {
            let mut text = String::new();
            while let Some(c) = cur.peek().filter(|c| c.is_ascii_alphanumeric() || *c == '_') {
                text.push(c);
                cur.bump();
            }
            let kind = if KEYWORDS.contains(&text.as_str()) {
                TokenKind::Keyword
            } else {
                TokenKind::Identifier
            };
            (kind, text)
        } else if c.is_ascii_digit() || (c == '.' && cur.peek_at(1).is_some_and(|d| d.is_ascii_digit())) {
            lex_number(&mut cur)
        } else if c == '"' || c == '\'' {
            let text = lex_quoted(&mut cur, c, line, column)?;
            let kind = if c == '"' { TokenKind::StringLiteral } else { TokenKind::CharLiteral };
            (kind, text)
        } else if PUNCTUATION.contains(&c) {
            cur.bump();
            (TokenKind::Punctuation, c.to_string())
        } else if let Some(op) = OPERATORS.iter().find(|op| cur.starts_with(op)) {
            for _ in 0..op.chars().count() {
                cur.bump();
            }
            (TokenKind::Operator, op.to_string())
        } else {
            return Err(cur.error(line, column, format!("illegal character {c:?}")));
        };
        tokens.push(Token { kind, text, line, column });
    }
    Ok(tokens)
}

fn skip_directive(cur: &mut Cursor<'_>) {
    while let Some(c) = cur.peek() {
        if c == '\\' && cur.peek_at(1) == Some('\n') {
            cur.bump();
            cur.bump();
            continue;
        }
        if c == '\n' {
            break;
        }
        cur.bump();
    }
}

fn lex_number(cur: &mut Cursor<'_>) -> (TokenKind, String) {
    let mut text = String::new();
    let mut is_float = false;
    if cur.starts_with("0x") || cur.starts_with("0X") {
        text.push(cur.bump().unwrap());
        text.push(cur.bump().unwrap());
        while let Some(c) = cur.peek().filter(|c| c.is_ascii_hexdigit()) {
            text.push(c);
            cur.bump();
        }
    } else {
        while let Some(c) = cur.peek() {
            if c.is_ascii_digit() {
                text.push(c);
            } else if c == '.' && !is_float {
                is_float = true;
                text.push(c);
            } else if (c == 'e' || c == 'E')
                && (cur.peek_at(1).is_some_and(|d| d.is_ascii_digit())
                    || (matches!(cur.peek_at(1), Some('+') | Some('-'))
                        && cur.peek_at(2).is_some_and(|d| d.is_ascii_digit())))
            {
                is_float = true;
                text.push(c);
                cur.bump();
                text.push(cur.peek().unwrap());
            } else {
                break;
            }
            cur.bump();
        }
    }
    while let Some(c) = cur.peek().filter(|c| matches!(c, 'u' | 'U' | 'l' | 'L' | 'f' | 'F')) {
        if matches!(c, 'f' | 'F') && text.starts_with("0x") {
            break;
        }
        if matches!(c, 'f' | 'F') {
            is_float = true;
        }
        text.push(c);
        cur.bump();
    }
    let kind = if is_float { TokenKind::FloatLiteral } else { TokenKind::IntLiteral };
    (kind, text)
}

fn lex_quoted(cur: &mut Cursor<'_>, quote: char, line: u32, column: u32) -> Result<String, CParseError> {
    let mut text = String::new();
    text.push(cur.bump().unwrap());
    loop {
        match cur.bump() {
            None | Some('\n') => {
                let what = if quote == '"' { "string" } else { "character" };
                return Err(cur.error(line, column, format!("unterminated {what} literal")));
            }
            Some('\\') => {
                text.push('\\');
                match cur.bump() {
                    Some('\n') | None => {
                        return Err(cur.error(line, column, "unterminated escape sequence"));
                    }
                    Some(c) => text.push(c),
                }
            }
            Some(c) if c == quote => {
                text.push(c);
                return Ok(text);
            }
            Some(c) => text.push(c),
        }
    }
}
