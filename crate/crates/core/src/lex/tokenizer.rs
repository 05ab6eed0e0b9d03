//! Hand-rolled Java 8 lexer with the normalization rules used for
//! vocabulary building: comments and whitespace are dropped, every numeric
//! literal becomes `<NUM>`, and tokens of 64 or more characters are removed.

use std::fmt;

use thiserror::Error;

/// Reserved token standing in for every numeric literal.
pub const NUM_TOKEN: &str = "<NUM>";

/// Tokens with this many characters or more are dropped.
pub const MAX_TOKEN_CHARS: usize = 64;

const KEYWORDS: &[&str] = &[
    "abstract",
    "assert",
    "boolean",
    "break",
    "byte",
    "case",
    "catch",
    "char",
    "class",
    "const",
    "continue",
    "default",
    "do",
    "double",
    "else",
    "enum",
    "extends",
    "final",
    "finally",
    "float",
    "for",
    "goto",
    "if",
    "implements",
    "import",
    "instanceof",
    "int",
    "interface",
    "long",
    "native",
    "new",
    "package",
    "private",
    "protected",
    "public",
    "return",
    "short",
    "static",
    "strictfp",
    "super",
    "switch",
    "synchronized",
    "this",
    "throw",
    "throws",
    "transient",
    "try",
    "void",
    "volatile",
    "while",
    "true",
    "false",
    "null",
];

// Longest first so that a linear scan yields maximal munch.
const OPERATORS: &[&str] = &[
    ">>>=", "<<=", ">>=", ">>>", "->", "++", "--", "&&", "||", "==", "!=", "<=", ">=", "+=", "-=", "*=",
    "/=", "&=", "|=", "^=", "%=", "<<", ">>", "=", ">", "<", "!", "~", "?", ":", "+", "-", "*", "/", "&",
    "|", "^", "%",
];

const SEPARATORS: &[&str] = &["...", "::", "(", ")", "{", "}", "[", "]", ";", ",", ".", "@"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TokenKind {
    Keyword,
    Identifier,
    Operator,
    Separator,
    Number,
    Str,
    Char,
    Reserved,
}

impl TokenKind {
    pub fn as_str(self) -> &'static str {
        match self {
            TokenKind::Keyword => "keyword",
            TokenKind::Identifier => "identifier",
            TokenKind::Operator => "operator",
            TokenKind::Separator => "separator",
            TokenKind::Number => "literal-number",
            TokenKind::Str => "literal-string",
            TokenKind::Char => "literal-char",
            TokenKind::Reserved => "reserved",
        }
    }
}

impl fmt::Display for TokenKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Token {
    pub text: String,
    pub kind: TokenKind,
}

impl Token {
    fn new(text: impl Into<String>, kind: TokenKind) -> Self {
        Token {
            text: text.into(),
            kind,
        }
    }
}

/// Something the lexer skipped instead of failing on.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LexWarning {
    pub offset: usize,
    pub message: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TokenStream {
    pub tokens: Vec<Token>,
    /// File path or diff side this stream came from.
    pub origin: String,
    pub warnings: Vec<LexWarning>,
}

impl TokenStream {
    pub fn texts(&self) -> impl Iterator<Item = &str> {
        self.tokens.iter().map(|t| t.text.as_str())
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LexError {
    #[error("unterminated string literal at byte {offset}")]
    UnterminatedString { offset: usize },
    #[error("unterminated character literal at byte {offset}")]
    UnterminatedChar { offset: usize },
    #[error("unterminated block comment at byte {offset}")]
    UnterminatedComment { offset: usize },
}

impl LexError {
    pub fn offset(&self) -> usize {
        match *self {
            LexError::UnterminatedString { offset }
            | LexError::UnterminatedChar { offset }
            | LexError::UnterminatedComment { offset } => offset,
        }
    }
}

/// How unterminated literals and comments are handled.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LexMode {
    /// Report them as [`LexError`].
    Strict,
    /// Recover and record a warning. Diff hunks routinely cut through
    /// comments, so feature extraction lexes in this mode.
    Lenient,
}

/// Tokenizes Java source, failing on unterminated literals or comments.
pub fn tokenize(source: &str) -> Result<TokenStream, LexError> {
    tokenize_with(source, LexMode::Strict)
}

/// Tokenizes Java source, recovering from unterminated constructs.
pub fn tokenize_lenient(source: &str) -> TokenStream {
    tokenize_with(source, LexMode::Lenient).expect("lenient lexing never fails")
}

pub fn tokenize_with(source: &str, mode: LexMode) -> Result<TokenStream, LexError> {
    let mut lexer = Lexer {
        src: source,
        pos: 0,
        mode,
        tokens: Vec::new(),
        warnings: Vec::new(),
    };
    lexer.run()?;
    Ok(TokenStream {
        tokens: lexer.tokens,
        origin: String::new(),
        warnings: lexer.warnings,
    })
}

/// Renders tokens back into lexable source, one space between tokens.
/// Reserved number tokens are rendered as `0`.
pub fn detokenize(tokens: &[Token]) -> String {
    tokens
        .iter()
        .map(|t| {
            if t.kind == TokenKind::Number {
                "0"
            } else {
                t.text.as_str()
            }
        })
        .collect::<Vec<_>>()
        .join(" ")
}

struct Lexer<'a> {
    src: &'a str,
    pos: usize,
    mode: LexMode,
    tokens: Vec<Token>,
    warnings: Vec<LexWarning>,
}

fn is_ident_start(c: char) -> bool {
    c.is_alphabetic() || c == '_' || c == '$'
}

fn is_ident_part(c: char) -> bool {
    c.is_alphanumeric() || c == '_' || c == '$'
}

impl<'a> Lexer<'a> {
    fn rest(&self) -> &'a str {
        &self.src[self.pos..]
    }

    fn peek(&self) -> Option<char> {
        self.rest().chars().next()
    }

    fn peek_at(&self, n: usize) -> Option<char> {
        self.rest().chars().nth(n)
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.pos += c.len_utf8();
        Some(c)
    }

    fn eat_while(&mut self, pred: impl Fn(char) -> bool) {
        while let Some(c) = self.peek() {
            if !pred(c) {
                break;
            }
            self.pos += c.len_utf8();
        }
    }

    fn warn(&mut self, offset: usize, message: impl Into<String>) {
        self.warnings.push(LexWarning {
            offset,
            message: message.into(),
        });
    }

    fn emit(&mut self, text: &str, kind: TokenKind) {
        if kind != TokenKind::Number && text.chars().count() >= MAX_TOKEN_CHARS {
            return;
        }
        if kind == TokenKind::Number {
            self.tokens.push(Token::new(NUM_TOKEN, TokenKind::Number));
        } else {
            self.tokens.push(Token::new(text, kind));
        }
    }

    fn run(&mut self) -> Result<(), LexError> {
        while let Some(c) = self.peek() {
            let start = self.pos;
            if c.is_whitespace() {
                self.bump();
            } else if self.rest().starts_with("//") {
                self.eat_while(|c| c != '\n' && c != '\r');
            } else if self.rest().starts_with("/*") {
                self.block_comment(start)?;
            } else if c == '"' {
                self.quoted(start, '"')?;
            } else if c == '\'' {
                self.quoted(start, '\'')?;
            } else if c.is_ascii_digit() || (c == '.' && self.peek_at(1).is_some_and(|d| d.is_ascii_digit()))
            {
                self.number();
                self.emit(&self.src[start..self.pos], TokenKind::Number);
            } else if is_ident_start(c) {
                self.eat_while(is_ident_part);
                let text = &self.src[start..self.pos];
                let kind = if KEYWORDS.contains(&text) {
                    TokenKind::Keyword
                } else {
                    TokenKind::Identifier
                };
                self.emit(text, kind);
            } else if let Some(sep) = SEPARATORS.iter().find(|s| self.rest().starts_with(*s)) {
                self.pos += sep.len();
                self.emit(sep, TokenKind::Separator);
            } else if let Some(op) = OPERATORS.iter().find(|s| self.rest().starts_with(*s)) {
                self.pos += op.len();
                self.emit(op, TokenKind::Operator);
            } else {
                self.bump();
                self.warn(start, format!("skipped unexpected character {c:?}"));
            }
        }
        Ok(())
    }

    fn block_comment(&mut self, start: usize) -> Result<(), LexError> {
        match self.src[start + 2..].find("*/") {
            Some(end) => {
                self.pos = start + 2 + end + 2;
                Ok(())
            }
            None => match self.mode {
                LexMode::Strict => Err(LexError::UnterminatedComment { offset: start }),
                LexMode::Lenient => {
                    self.warn(start, "unterminated block comment; dropped remainder");
                    self.pos = self.src.len();
                    Ok(())
                }
            },
        }
    }

    fn quoted(&mut self, start: usize, quote: char) -> Result<(), LexError> {
        self.bump();
        loop {
            match self.bump() {
                Some('\\') => {
                    // An escape never swallows a line break.
                    if matches!(self.peek(), Some(c) if c != '\n' && c != '\r') {
                        self.bump();
                    }
                }
                Some(c) if c == quote => {
                    let kind = if quote == '"' {
                        TokenKind::Str
                    } else {
                        TokenKind::Char
                    };
                    self.emit(&self.src[start..self.pos], kind);
                    return Ok(());
                }
                Some('\n') | Some('\r') | None => break,
                Some(_) => {}
            }
        }
        match self.mode {
            LexMode::Strict if quote == '"' => Err(LexError::UnterminatedString { offset: start }),
            LexMode::Strict => Err(LexError::UnterminatedChar { offset: start }),
            LexMode::Lenient => {
                self.warn(start, "unterminated literal; skipped opening quote");
                self.pos = start + 1;
                Ok(())
            }
        }
    }

    fn number(&mut self) {
        let rest = self.rest();
        if rest.starts_with("0x") || rest.starts_with("0X") {
            self.pos += 2;
            self.eat_while(|c| c.is_ascii_hexdigit() || c == '_');
            if self.peek() == Some('.') {
                self.bump();
                self.eat_while(|c| c.is_ascii_hexdigit() || c == '_');
            }
            if matches!(self.peek(), Some('p' | 'P')) {
                self.exponent();
            }
            self.suffix(&['l', 'L', 'f', 'F', 'd', 'D']);
            return;
        }
        if rest.starts_with("0b") || rest.starts_with("0B") {
            self.pos += 2;
            self.eat_while(|c| c == '0' || c == '1' || c == '_');
            self.suffix(&['l', 'L']);
            return;
        }
        self.eat_while(|c| c.is_ascii_digit() || c == '_');
        if self.peek() == Some('.') {
            let next = self.peek_at(1);
            let fraction = match next {
                Some(c) if c.is_ascii_digit() => true,
                Some(c) => (c != '.' && !is_ident_start(c)) || matches!(c, 'e' | 'E' | 'f' | 'F' | 'd' | 'D'),
                None => true,
            };
            if fraction {
                self.bump();
                self.eat_while(|c| c.is_ascii_digit() || c == '_');
            }
        }
        if matches!(self.peek(), Some('e' | 'E')) {
            self.exponent();
        }
        self.suffix(&['l', 'L', 'f', 'F', 'd', 'D']);
    }

    fn exponent(&mut self) {
        let sign = matches!(self.peek_at(1), Some('+' | '-'));
        let digit_at = if sign { 2 } else { 1 };
        if self.peek_at(digit_at).is_some_and(|c| c.is_ascii_digit()) {
            self.pos += 1 + usize::from(sign);
            self.eat_while(|c| c.is_ascii_digit() || c == '_');
        }
    }

    fn suffix(&mut self, allowed: &[char]) {
        if let Some(c) = self.peek() {
            if allowed.contains(&c) {
                self.bump();
            }
        }
    }
}
