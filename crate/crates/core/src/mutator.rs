//! First-order mutant generation for the nine operator families.
//!
//! Each eligible operator occurrence yields exactly one mutant, using a fixed
//! replacement per source operator:
//!
//! | family | replacements |
//! |--------|--------------|
//! | AOR-B  | `+`→`-`, `-`→`+`, `*`→`/`, `/`→`*`, `%`→`*` |
//! | AOR-S  | `++`→`--`, `--`→`++` |
//! | AOR-U  | unary `-`→`+`, unary `+`→`-` |
//! | LOR    | `&`→`\|`, `\|`→`&`, `^`→`&` |
//! | SOR    | `>>`→`<<`, `<<`→`>>`, `>>>`→`<<` |
//! | ROR    | `>=`→`<`, `<=`→`>`, `>`→`<=`, `<`→`>=`, `==`→`!=`, `!=`→`==` |
//! | COR    | `&&`→`\|\|`, `\|\|`→`&&` |
//! | COD    | delete `!` |
//! | SAOR   | `*=`→`/=`, `/=`→`*=`, `+=`→`-=`, `-=`→`+=`, `%=`→`*=` |

use std::collections::BTreeMap;
use std::fmt;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use globset::{Glob, GlobSet, GlobSetBuilder};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;
use walkdir::WalkDir;

use crate::lexer::{tokenize, tokenize_bytes, LexError, Token, TokenKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Operator {
    #[serde(rename = "AOR-B")]
    AorB,
    #[serde(rename = "AOR-S")]
    AorS,
    #[serde(rename = "AOR-U")]
    AorU,
    #[serde(rename = "LOR")]
    Lor,
    #[serde(rename = "SOR")]
    Sor,
    #[serde(rename = "ROR")]
    Ror,
    #[serde(rename = "COR")]
    Cor,
    #[serde(rename = "COD")]
    Cod,
    #[serde(rename = "SAOR")]
    Saor,
}

impl Operator {
    pub const ALL: [Operator; 9] = [
        Operator::AorB,
        Operator::AorS,
        Operator::AorU,
        Operator::Lor,
        Operator::Sor,
        Operator::Ror,
        Operator::Cor,
        Operator::Cod,
        Operator::Saor,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Operator::AorB => "AOR-B",
            Operator::AorS => "AOR-S",
            Operator::AorU => "AOR-U",
            Operator::Lor => "LOR",
            Operator::Sor => "SOR",
            Operator::Ror => "ROR",
            Operator::Cor => "COR",
            Operator::Cod => "COD",
            Operator::Saor => "SAOR",
        }
    }

    /// Source operator texts this family may mutate.
    pub fn domain(self) -> &'static [&'static str] {
        match self {
            Operator::AorB => &["+", "-", "*", "/", "%"],
            Operator::AorS => &["++", "--"],
            Operator::AorU => &["+", "-"],
            Operator::Lor => &["&", "|", "^"],
            Operator::Sor => &[">>", "<<", ">>>"],
            Operator::Ror => &[">=", "<=", ">", "<", "==", "!="],
            Operator::Cor => &["&&", "||"],
            Operator::Cod => &["!"],
            Operator::Saor => &["*=", "/=", "+=", "-=", "%="],
        }
    }

    /// The replacement for `original`, or `None` if it is outside the domain.
    /// COD yields the empty string.
    pub fn replacement(self, original: &str) -> Option<&'static str> {
        let r = match (self, original) {
            (Operator::AorB, "+") => "-",
            (Operator::AorB, "-") => "+",
            (Operator::AorB, "*") => "/",
            (Operator::AorB, "/") => "*",
            (Operator::AorB, "%") => "*",
            (Operator::AorS, "++") => "--",
            (Operator::AorS, "--") => "++",
            (Operator::AorU, "-") => "+",
            (Operator::AorU, "+") => "-",
            (Operator::Lor, "&") => "|",
            (Operator::Lor, "|") => "&",
            (Operator::Lor, "^") => "&",
            (Operator::Sor, ">>") => "<<",
            (Operator::Sor, "<<") => ">>",
            (Operator::Sor, ">>>") => "<<",
            (Operator::Ror, ">=") => "<",
            (Operator::Ror, "<=") => ">",
            (Operator::Ror, ">") => "<=",
            (Operator::Ror, "<") => ">=",
            (Operator::Ror, "==") => "!=",
            (Operator::Ror, "!=") => "==",
            (Operator::Cor, "&&") => "||",
            (Operator::Cor, "||") => "&&",
            (Operator::Cod, "!") => "",
            (Operator::Saor, "*=") => "/=",
            (Operator::Saor, "/=") => "*=",
            (Operator::Saor, "+=") => "-=",
            (Operator::Saor, "-=") => "+=",
            (Operator::Saor, "%=") => "*=",
            _ => return None,
        };
        Some(r)
    }
}

impl fmt::Display for Operator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
#[error("unknown mutation operator `{0}` (expected one of AOR-B, AOR-S, AOR-U, LOR, SOR, ROR, COR, COD, SAOR)")]
pub struct UnknownOperator(pub String);

impl FromStr for Operator {
    type Err = UnknownOperator;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let wanted = s.trim();
        Operator::ALL
            .into_iter()
            .find(|op| op.name().eq_ignore_ascii_case(wanted))
            .ok_or_else(|| UnknownOperator(s.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MutationPoint {
    pub operator: Operator,
    pub token_index: usize,
    /// Empty for COD.
    pub replacement_text: String,
    pub line: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Mutant {
    pub id: u64,
    pub class_name: String,
    pub file_path: String,
    pub point: MutationPoint,
    pub original_text: String,
}

#[derive(Debug, Error)]
pub enum MutateError {
    #[error("mutation point is stale: {0}")]
    StalePoint(String),
    #[error(transparent)]
    Lex(#[from] LexError),
}

/// Token-context facts needed to classify one operator occurrence.
struct Context<'a, 'src> {
    tokens: &'a [Token<'src>],
    /// Tokens belonging to a type-argument list (`List<Map<K, V>>`).
    generic: Vec<bool>,
}

impl<'a, 'src> Context<'a, 'src> {
    fn new(tokens: &'a [Token<'src>]) -> Self {
        Context {
            tokens,
            generic: generic_mask(tokens),
        }
    }

    fn prev_significant(&self, index: usize) -> Option<usize> {
        (0..index).rev().find(|&i| !self.tokens[i].kind.is_trivia())
    }

    /// `+`, `-`, `&`, `|`, `^` are in operand position when nothing that could
    /// end an expression precedes them.
    fn is_unary_position(&self, index: usize) -> bool {
        let Some(p) = self.prev_significant(index) else {
            return true;
        };
        let prev = &self.tokens[p];
        match prev.kind {
            TokenKind::OperatorSymbol => {
                // Postfix `a++ - b` ends an operand.
                if prev.text == "++" || prev.text == "--" {
                    return !self.prev_significant(p).is_some_and(|pp| {
                        let t = &self.tokens[pp];
                        matches!(t.kind, TokenKind::Identifier | TokenKind::NumberLiteral)
                            || t.is_punct(")")
                            || t.is_punct("]")
                    });
                }
                true
            }
            TokenKind::Punctuation => matches!(prev.text, "(" | "[" | "," | ";" | "{"),
            TokenKind::Keyword => matches!(prev.text, "return" | "case"),
            _ => false,
        }
    }

    fn classify(&self, index: usize) -> Option<Operator> {
        let tok = &self.tokens[index];
        if tok.kind != TokenKind::OperatorSymbol || self.generic[index] {
            return None;
        }
        let op = match tok.text {
            "+" | "-" if self.is_unary_position(index) => Operator::AorU,
            "+" | "-" | "*" | "/" | "%" => Operator::AorB,
            "++" | "--" => Operator::AorS,
            "&" | "|" | "^" if !self.is_unary_position(index) => Operator::Lor,
            ">>" | "<<" | ">>>" => Operator::Sor,
            ">=" | "<=" | ">" | "<" | "==" | "!=" => Operator::Ror,
            "&&" | "||" => Operator::Cor,
            "!" => Operator::Cod,
            "*=" | "/=" | "+=" | "-=" | "%=" => Operator::Saor,
            _ => return None,
        };
        Some(op)
    }

    /// Rejects replacements that would merge with a neighbouring token
    /// (`a+-b` → `a--b`) and therefore not be a single-token change.
    fn splices_cleanly(&self, index: usize, replacement: &str) -> bool {
        let before = index.checked_sub(1).map(|i| self.tokens[i].text);
        let after = self.tokens.get(index + 1).map(|t| t.text);
        let mut expected: Vec<&str> = Vec::with_capacity(3);
        expected.extend(before);
        if !replacement.is_empty() {
            expected.push(replacement);
        }
        expected.extend(after);
        let window: String = expected.concat();
        match tokenize(&window) {
            Ok(toks) => toks.iter().map(|t| t.text).eq(expected.iter().copied()),
            Err(_) => false,
        }
    }
}

fn generic_mask(tokens: &[Token<'_>]) -> Vec<bool> {
    const MODIFIERS: &[&str] = &[
        "public", "private", "protected", "static", "final", "abstract", "synchronized", "native", "default",
    ];
    let mut mask = vec![false; tokens.len()];
    let significant = |i: usize| (0..i).rev().find(|&j| !tokens[j].kind.is_trivia());

    for start in 0..tokens.len() {
        if mask[start] || !tokens[start].is_op("<") {
            continue;
        }
        // Type arguments hug their type name: `List<`, `.<T>`, `public <T>`.
        let opens = match start.checked_sub(1).map(|i| &tokens[i]) {
            Some(t) if t.kind == TokenKind::Identifier => true,
            _ => significant(start).is_some_and(|p| {
                tokens[p].is_punct(".") || (tokens[p].kind == TokenKind::Keyword && MODIFIERS.contains(&tokens[p].text))
            }),
        };
        if !opens {
            continue;
        }
        let mut depth: i32 = 1;
        let mut end = None;
        for (j, t) in tokens.iter().enumerate().skip(start + 1) {
            let allowed = match t.kind {
                TokenKind::Identifier | TokenKind::Keyword | TokenKind::Whitespace | TokenKind::Comment => true,
                TokenKind::Punctuation => matches!(t.text, "." | "," | "[" | "]" | "@"),
                TokenKind::OperatorSymbol => match t.text {
                    "<" => {
                        depth += 1;
                        true
                    }
                    ">" => {
                        depth -= 1;
                        true
                    }
                    ">>" => {
                        depth -= 2;
                        true
                    }
                    ">>>" => {
                        depth -= 3;
                        true
                    }
                    "?" | "&" => true,
                    _ => false,
                },
                _ => false,
            };
            if !allowed || depth < 0 {
                break;
            }
            if depth == 0 {
                end = Some(j);
                break;
            }
        }
        if let Some(end) = end {
            mask[start..=end].iter_mut().for_each(|m| *m = true);
        }
    }
    mask
}

/// All first-order mutation points in a token stream, sorted by token index.
pub fn find_mutation_points(tokens: &[Token<'_>]) -> Vec<MutationPoint> {
    let ctx = Context::new(tokens);
    (0..tokens.len())
        .filter_map(|i| {
            let op = ctx.classify(i)?;
            let replacement = op.replacement(tokens[i].text)?;
            ctx.splices_cleanly(i, replacement).then(|| MutationPoint {
                operator: op,
                token_index: i,
                replacement_text: replacement.to_string(),
                line: tokens[i].line,
            })
        })
        .collect()
}

/// Splice one mutation point into `source`.
pub fn apply_mutation(source: &str, point: &MutationPoint) -> Result<String, MutateError> {
    let tokens = tokenize(source)?;
    let Some(tok) = tokens.get(point.token_index) else {
        return Err(MutateError::StalePoint(format!(
            "token {} out of range ({} tokens)",
            point.token_index,
            tokens.len()
        )));
    };
    let ctx = Context::new(&tokens);
    match ctx.classify(point.token_index) {
        Some(op) if op == point.operator && op.replacement(tok.text) == Some(point.replacement_text.as_str()) => {}
        _ => {
            return Err(MutateError::StalePoint(format!(
                "token {} is `{}`, not a {} site for `{}`",
                point.token_index, tok.text, point.operator, point.replacement_text
            )))
        }
    }
    let mut out = String::with_capacity(source.len() + point.replacement_text.len());
    out.push_str(&source[..tok.byte_offset]);
    out.push_str(&point.replacement_text);
    out.push_str(&source[tok.end()..]);
    Ok(out)
}

#[derive(Debug, Clone)]
pub struct GenerateOptions {
    pub include: Vec<String>,
    pub exclude: Vec<String>,
    pub operators: Vec<Operator>,
}

impl Default for GenerateOptions {
    fn default() -> Self {
        GenerateOptions {
            include: vec!["**/*.java".to_string()],
            exclude: Vec::new(),
            operators: Operator::ALL.to_vec(),
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct Generation {
    pub mutants: Vec<Mutant>,
    /// Line count per class, for LoC-based sampling weights.
    pub class_loc: BTreeMap<String, u64>,
    pub warnings: Vec<String>,
}

#[derive(Debug, Error)]
pub enum GenerateError {
    #[error("project root {0} does not exist or is not a directory")]
    MissingRoot(PathBuf),
    #[error("invalid glob `{pattern}`: {source}")]
    Glob {
        pattern: String,
        #[source]
        source: globset::Error,
    },
    #[error("include patterns matched no files under {0}")]
    NoFiles(PathBuf),
    #[error("no mutants: none of the selected files contain an eligible operator")]
    NoMutants,
    #[error("walking {path}: {source}")]
    Walk {
        path: PathBuf,
        #[source]
        source: walkdir::Error,
    },
}

pub fn build_globset(patterns: &[String]) -> Result<GlobSet, GenerateError> {
    let mut builder = GlobSetBuilder::new();
    for p in patterns {
        let glob = Glob::new(p).map_err(|source| GenerateError::Glob {
            pattern: p.clone(),
            source,
        })?;
        builder.add(glob);
    }
    builder.build().map_err(|source| GenerateError::Glob {
        pattern: patterns.join(","),
        source,
    })
}

/// Relative paths (with `/` separators) of the production files selected by
/// `options`, sorted.
pub fn select_files(root: &Path, options: &GenerateOptions) -> Result<Vec<String>, GenerateError> {
    if !root.is_dir() {
        return Err(GenerateError::MissingRoot(root.to_path_buf()));
    }
    let include = build_globset(&options.include)?;
    let exclude = build_globset(&options.exclude)?;
    let mut files = Vec::new();
    for entry in WalkDir::new(root).follow_links(false) {
        let entry = entry.map_err(|source| GenerateError::Walk {
            path: root.to_path_buf(),
            source,
        })?;
        if !entry.file_type().is_file() {
            continue;
        }
        let rel = entry.path().strip_prefix(root).expect("walkdir yields paths under root");
        let rel: String = rel
            .components()
            .map(|c| c.as_os_str().to_string_lossy())
            .collect::<Vec<_>>()
            .join("/");
        if include.is_match(&rel) && !exclude.is_match(&rel) {
            files.push(rel);
        }
    }
    files.sort();
    Ok(files)
}

struct FileMutation {
    file: String,
    loc: u64,
    points: Vec<(MutationPoint, String)>,
}

/// Scan every selected file and produce the project's mutant catalog.
///
/// Ordering is by file path, then token index, then operator; ids run
/// 1..=N in that order. Unreadable or unlexable files are skipped with a
/// warning.
pub fn generate_mutants(root: &Path, options: &GenerateOptions) -> Result<Generation, GenerateError> {
    let files = select_files(root, options)?;
    if files.is_empty() {
        return Err(GenerateError::NoFiles(root.to_path_buf()));
    }

    let scanned: Vec<Result<FileMutation, String>> = files
        .par_iter()
        .map(|file| {
            let bytes = std::fs::read(root.join(file)).map_err(|e| format!("{file}: unreadable: {e}"))?;
            let tokens = tokenize_bytes(&bytes).map_err(|e| format!("{file}: skipped: {e}"))?;
            let points = find_mutation_points(&tokens)
                .into_iter()
                .filter(|p| options.operators.contains(&p.operator))
                .map(|p| {
                    let original = tokens[p.token_index].text.to_string();
                    (p, original)
                })
                .collect();
            let loc = bytes.iter().filter(|&&b| b == b'\n').count() as u64
                + u64::from(!bytes.is_empty() && !bytes.ends_with(b"\n"));
            Ok(FileMutation {
                file: file.clone(),
                loc,
                points,
            })
        })
        .collect();

    let mut generation = Generation::default();
    let mut next_id = 1u64;
    for scan in scanned {
        let scan = match scan {
            Ok(s) => s,
            Err(warning) => {
                log::warn!("{warning}");
                generation.warnings.push(warning);
                continue;
            }
        };
        generation.class_loc.insert(scan.file.clone(), scan.loc);
        let mut points = scan.points;
        points.sort_by_key(|(p, _)| (p.token_index, p.operator));
        for (point, original_text) in points {
            generation.mutants.push(Mutant {
                id: next_id,
                class_name: scan.file.clone(),
                file_path: scan.file.clone(),
                point,
                original_text,
            });
            next_id += 1;
        }
    }
    if generation.mutants.is_empty() {
        return Err(GenerateError::NoMutants);
    }
    Ok(generation)
}

pub const MUTANT_LIST_HEADER: &str = "id\tclass_name\tfile_path\tline\toperator\toriginal\treplacement";

/// Tab-separated mutant list, one mutant per line after the header.
pub fn write_mutant_list<W: Write>(mutants: &[Mutant], mut out: W) -> io::Result<()> {
    writeln!(out, "{MUTANT_LIST_HEADER}")?;
    for m in mutants {
        writeln!(
            out,
            "{}\t{}\t{}\t{}\t{}\t{}\t{}",
            m.id, m.class_name, m.file_path, m.point.line, m.point.operator, m.original_text, m.point.replacement_text
        )?;
    }
    Ok(())
}
