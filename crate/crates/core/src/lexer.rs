//! Lossless tokenizer for Java-style C-family source.
//!
//! Every byte of the input lands in exactly one token, so concatenating the
//! token texts reproduces the file. Operator symbols are only ever produced
//! outside string literals, char literals and comments.

use std::fmt;

use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TokenKind {
    Identifier,
    Keyword,
    NumberLiteral,
    StringLiteral,
    CharLiteral,
    OperatorSymbol,
    Punctuation,
    Comment,
    Whitespace,
}

impl TokenKind {
    /// Whitespace and comments carry no syntax.
    pub fn is_trivia(self) -> bool {
        matches!(self, TokenKind::Whitespace | TokenKind::Comment)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Token<'src> {
    pub kind: TokenKind,
    pub text: &'src str,
    /// 1-based.
    pub line: usize,
    /// 1-based, counted in characters.
    pub column: usize,
    pub byte_offset: usize,
}

impl Token<'_> {
    pub fn end(&self) -> usize {
        self.byte_offset + self.text.len()
    }

    pub fn is_op(&self, text: &str) -> bool {
        self.kind == TokenKind::OperatorSymbol && self.text == text
    }

    pub fn is_punct(&self, text: &str) -> bool {
        self.kind == TokenKind::Punctuation && self.text == text
    }

    pub fn is_keyword(&self, text: &str) -> bool {
        self.kind == TokenKind::Keyword && self.text == text
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LiteralKind {
    String,
    TextBlock,
    Char,
    BlockComment,
}

impl fmt::Display for LiteralKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LiteralKind::String => "string literal",
            LiteralKind::TextBlock => "text block",
            LiteralKind::Char => "char literal",
            LiteralKind::BlockComment => "block comment",
        })
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum LexError {
    #[error("source is not valid UTF-8 (first bad byte at offset {offset})")]
    Encoding { offset: usize },
    #[error("unterminated {kind} starting at line {line}")]
    Unterminated { kind: LiteralKind, line: usize },
}

pub const KEYWORDS: &[&str] = &[
    "abstract", "assert", "boolean", "break", "byte", "case", "catch", "char", "class", "const",
    "continue", "default", "do", "double", "else", "enum", "extends", "final", "finally", "float",
    "for", "goto", "if", "implements", "import", "instanceof", "int", "interface", "long",
    "native", "new", "package", "private", "protected", "public", "return", "short", "static",
    "strictfp", "super", "switch", "synchronized", "this", "throw", "throws", "transient", "try",
    "void", "volatile", "while", "true", "false", "null",
];

// Longest first so that maximal munch is a linear scan.
const OPERATORS: &[&str] = &[
    ">>>=", "<<=", ">>=", ">>>", "->", "++", "--", "&&", "||", "==", "!=", "<=", ">=", "+=", "-=",
    "*=", "/=", "%=", "&=", "|=", "^=", "<<", ">>", "+", "-", "*", "/", "%", "&", "|", "^", "!",
    "~", "?", ":", "=", "<", ">",
];

const PUNCTUATION: &[&str] = &["...", "::", "(", ")", "[", "]", "{", "}", ";", ",", ".", "@"];

/// Tokenize raw bytes, rejecting anything that is not UTF-8.
pub fn tokenize_bytes(bytes: &[u8]) -> Result<Vec<Token<'_>>, LexError> {
    let source = std::str::from_utf8(bytes).map_err(|e| LexError::Encoding {
        offset: e.valid_up_to(),
    })?;
    tokenize(source)
}

pub fn tokenize(source: &str) -> Result<Vec<Token<'_>>, LexError> {
    Lexer::new(source).run()
}

struct Lexer<'src> {
    src: &'src str,
    bytes: &'src [u8],
    pos: usize,
    line: usize,
    column: usize,
    tokens: Vec<Token<'src>>,
}

impl<'src> Lexer<'src> {
    fn new(src: &'src str) -> Self {
        Lexer {
            src,
            bytes: src.as_bytes(),
            pos: 0,
            line: 1,
            column: 1,
            tokens: Vec::new(),
        }
    }

    fn run(mut self) -> Result<Vec<Token<'src>>, LexError> {
        while self.pos < self.bytes.len() {
            let start = self.pos;
            let kind = self.scan()?;
            self.push(kind, start);
        }
        Ok(self.tokens)
    }

    fn push(&mut self, kind: TokenKind, start: usize) {
        let text = &self.src[start..self.pos];
        self.tokens.push(Token {
            kind,
            text,
            line: self.line,
            column: self.column,
            byte_offset: start,
        });
        for c in text.chars() {
            if c == '\n' {
                self.line += 1;
                self.column = 1;
            } else {
                self.column += 1;
            }
        }
    }

    fn peek(&self, ahead: usize) -> Option<u8> {
        self.bytes.get(self.pos + ahead).copied()
    }

    fn rest(&self) -> &'src str {
        &self.src[self.pos..]
    }

    /// Line number of the current position, for error reporting.
    fn current_line(&self) -> usize {
        self.line
    }

    fn scan(&mut self) -> Result<TokenKind, LexError> {
        let rest = self.rest();
        let c = rest.chars().next().expect("scan called at end of input");

        if c.is_whitespace() {
            let len: usize = rest
                .chars()
                .take_while(|c| c.is_whitespace())
                .map(char::len_utf8)
                .sum();
            self.pos += len;
            return Ok(TokenKind::Whitespace);
        }
        if rest.starts_with("//") {
            self.pos += rest.find('\n').unwrap_or(rest.len());
            return Ok(TokenKind::Comment);
        }
        if let Some(body) = rest.strip_prefix("/*") {
            return match body.find("*/") {
                Some(end) => {
                    self.pos += end + 4;
                    Ok(TokenKind::Comment)
                }
                None => Err(LexError::Unterminated {
                    kind: LiteralKind::BlockComment,
                    line: self.current_line(),
                }),
            };
        }
        if rest.starts_with("\"\"\"") {
            return self.text_block();
        }
        if c == '"' {
            self.quoted(b'"', LiteralKind::String)?;
            return Ok(TokenKind::StringLiteral);
        }
        if c == '\'' {
            self.quoted(b'\'', LiteralKind::Char)?;
            return Ok(TokenKind::CharLiteral);
        }
        if c.is_ascii_digit() || (c == '.' && self.peek(1).is_some_and(|b| b.is_ascii_digit())) {
            self.number();
            return Ok(TokenKind::NumberLiteral);
        }
        if is_ident_start(c) {
            let len: usize = rest
                .chars()
                .take_while(|&c| is_ident_continue(c))
                .map(char::len_utf8)
                .sum();
            let word = &rest[..len];
            self.pos += len;
            return Ok(if KEYWORDS.contains(&word) {
                TokenKind::Keyword
            } else {
                TokenKind::Identifier
            });
        }
        if let Some(p) = PUNCTUATION.iter().find(|p| rest.starts_with(**p)) {
            self.pos += p.len();
            return Ok(TokenKind::Punctuation);
        }
        if let Some(op) = OPERATORS.iter().find(|op| rest.starts_with(**op)) {
            self.pos += op.len();
            return Ok(TokenKind::OperatorSymbol);
        }
        // Stray character (`#`, `\`, ...). Keep it so the stream stays lossless.
        self.pos += c.len_utf8();
        Ok(TokenKind::Punctuation)
    }

    fn quoted(&mut self, quote: u8, kind: LiteralKind) -> Result<(), LexError> {
        let line = self.current_line();
        let mut i = self.pos + 1;
        while let Some(&b) = self.bytes.get(i) {
            match b {
                b'\\' => i += 2,
                b'\n' => break,
                _ if b == quote => {
                    self.pos = i + 1;
                    return Ok(());
                }
                _ => i += 1,
            }
        }
        Err(LexError::Unterminated { kind, line })
    }

    fn text_block(&mut self) -> Result<TokenKind, LexError> {
        let line = self.current_line();
        let mut i = self.pos + 3;
        while i < self.bytes.len() {
            if self.bytes[i] == b'\\' {
                i += 2;
            } else if self.bytes[i..].starts_with(b"\"\"\"") {
                self.pos = i + 3;
                return Ok(TokenKind::StringLiteral);
            } else {
                i += 1;
            }
        }
        Err(LexError::Unterminated {
            kind: LiteralKind::TextBlock,
            line,
        })
    }

    fn number(&mut self) {
        let b = self.bytes;
        let mut i = self.pos;
        let radix_prefix = b[i] == b'0' && matches!(b.get(i + 1), Some(b'x' | b'X' | b'b' | b'B'));
        if radix_prefix {
            i += 2;
            while i < b.len() && (b[i].is_ascii_hexdigit() || b[i] == b'_') {
                i += 1;
            }
        } else {
            while i < b.len() && (b[i].is_ascii_digit() || b[i] == b'_') {
                i += 1;
            }
            if i < b.len() && b[i] == b'.' && b.get(i + 1).is_some_and(|c| c.is_ascii_digit()) {
                i += 1;
                while i < b.len() && (b[i].is_ascii_digit() || b[i] == b'_') {
                    i += 1;
                }
            } else if i < b.len() && b[i] == b'.' && !b.get(i + 1).is_some_and(|c| c.is_ascii_alphabetic() || *c == b'.') {
                // `1.` is a double literal; `1.foo` and `1..` are not ours.
                i += 1;
            }
            if i < b.len() && matches!(b[i], b'e' | b'E') {
                let mut j = i + 1;
                if j < b.len() && matches!(b[j], b'+' | b'-') {
                    j += 1;
                }
                if j < b.len() && b[j].is_ascii_digit() {
                    i = j;
                    while i < b.len() && b[i].is_ascii_digit() {
                        i += 1;
                    }
                }
            }
        }
        if i < b.len() && matches!(b[i], b'l' | b'L' | b'f' | b'F' | b'd' | b'D') {
            i += 1;
        }
        self.pos = i;
    }
}

fn is_ident_start(c: char) -> bool {
    c == '_' || c == '$' || c.is_alphabetic()
}

fn is_ident_continue(c: char) -> bool {
    c == '_' || c == '$' || c.is_alphanumeric()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn kinds(src: &str) -> Vec<(TokenKind, &str)> {
        tokenize(src).unwrap().into_iter().map(|t| (t.kind, t.text)).collect()
    }

    #[test]
    fn simple_binary_expression() {
        use TokenKind::*;
        assert_eq!(
            kinds("a + b"),
            vec![(Identifier, "a"), (Whitespace, " "), (OperatorSymbol, "+"), (Whitespace, " "), (Identifier, "b")]
        );
    }

    #[test]
    fn string_literal_masks_operators() {
        let toks = tokenize("\"a + b\"").unwrap();
        assert_eq!(toks.len(), 1);
        assert_eq!(toks[0].kind, TokenKind::StringLiteral);
    }

    #[test]
    fn comment_masks_operators() {
        let ops: Vec<_> = tokenize("x /*+*/ - y")
            .unwrap()
            .into_iter()
            .filter(|t| t.kind == TokenKind::OperatorSymbol)
            .map(|t| t.text)
            .collect();
        assert_eq!(ops, vec!["-"]);
    }

    #[test]
    fn escapes_in_literals() {
        let toks = kinds(r#"s = "a\"+b"; c = '\''; d = '\\';"#);
        assert!(toks.contains(&(TokenKind::StringLiteral, r#""a\"+b""#)));
        assert!(toks.contains(&(TokenKind::CharLiteral, r"'\''")));
        assert!(toks.contains(&(TokenKind::CharLiteral, r"'\\'")));
        assert!(!toks.iter().any(|t| t.0 == TokenKind::OperatorSymbol && t.1 == "+"));
    }

    #[test]
    fn maximal_munch_on_operators() {
        let ops: Vec<_> = tokenize("a >>>= b >> c && d || e -> f != g")
            .unwrap()
            .into_iter()
            .filter(|t| t.kind == TokenKind::OperatorSymbol)
            .map(|t| t.text)
            .collect();
        assert_eq!(ops, vec![">>>=", ">>", "&&", "||", "->", "!="]);
    }

    #[test]
    fn numbers_and_keywords() {
        use TokenKind::*;
        let toks = kinds("return 0x1F + 1.5e-3f - .5 + 10L;");
        assert_eq!(toks[0], (Keyword, "return"));
        let nums: Vec<_> = toks.iter().filter(|t| t.0 == NumberLiteral).map(|t| t.1).collect();
        assert_eq!(nums, vec!["0x1F", "1.5e-3f", ".5", "10L"]);
    }

    #[test]
    fn line_and_column_tracking() {
        let toks = tokenize("a\n  /* x\n y */ b").unwrap();
        let b = toks.iter().find(|t| t.text == "b").unwrap();
        assert_eq!((b.line, b.column), (3, 7));
        assert_eq!(b.byte_offset, 15);
    }

    #[test]
    fn unterminated_regions_report_line() {
        assert_eq!(
            tokenize("a\nb = \"oops\n").unwrap_err(),
            LexError::Unterminated { kind: LiteralKind::String, line: 2 }
        );
        assert_eq!(
            tokenize("x /* never closed").unwrap_err(),
            LexError::Unterminated { kind: LiteralKind::BlockComment, line: 1 }
        );
        assert!(matches!(tokenize("'a"), Err(LexError::Unterminated { kind: LiteralKind::Char, .. })));
    }

    #[test]
    fn text_blocks() {
        let toks = kinds("String s = \"\"\"\n  a + \"b\"\n\"\"\";");
        assert!(toks.iter().any(|t| t.0 == TokenKind::StringLiteral && t.1.contains("a + ")));
        assert!(!toks.iter().any(|t| t.1 == "+"));
    }

    #[test]
    fn non_utf8_is_an_encoding_error() {
        assert_eq!(
            tokenize_bytes(&[b'a', b' ', 0xff, 0xfe]).unwrap_err(),
            LexError::Encoding { offset: 2 }
        );
    }

    proptest! {
        #[test]
        fn round_trip_is_lossless(src in "[a-z0-9 +\\-*/%<>=!&|^~?:;(){}\\[\\],.\n\t@#]{0,80}") {
            if let Ok(tokens) = tokenize(&src) {
                let joined: String = tokens.iter().map(|t| t.text).collect();
                prop_assert_eq!(joined, src);
            }
        }

        #[test]
        fn arbitrary_text_round_trips(src in "\\PC{0,60}") {
            if let Ok(tokens) = tokenize(&src) {
                let joined: String = tokens.iter().map(|t| t.text).collect();
                prop_assert_eq!(&joined, &src);
                for pair in tokens.windows(2) {
                    prop_assert_eq!(pair[0].end(), pair[1].byte_offset);
                }
            }
        }
    }
}
