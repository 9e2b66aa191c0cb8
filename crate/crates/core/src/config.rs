//! Nested-brace text parameter files.
//!
//! ```text
//! # comment
//! algo_id: "Neal2"
//! fixed_values {
//!     mean { size: 2 data: [3.484, 3.487] }
//!     var_scaling: 0.01
//! }
//! ```
//!
//! A value is a number, a quoted string, a bare identifier (`true`,
//! `false`, enum-like tokens), a bracketed list of numbers, or a nested
//! tree. Entries may optionally be separated by `,` or `;`.

use std::fmt::{self, Write as _};
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum ConfigValue {
    Number(f64),
    Str(String),
    Ident(String),
    List(Vec<f64>),
    Tree(ConfigTree),
}

/// Parsed parameter file: entries in document order. Keys may repeat only
/// when every occurrence holds a nested tree.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ConfigTree {
    entries: Vec<(String, ConfigValue)>,
}

pub fn is_valid_key(key: &str) -> bool {
    let mut chars = key.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() || c == '_' => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

impl ConfigTree {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn entries(&self) -> &[(String, ConfigValue)] {
        &self.entries
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    /// Appends an entry, enforcing the key and duplicate rules.
    pub fn push(&mut self, key: impl Into<String>, value: ConfigValue) -> Result<()> {
        let key = key.into();
        if !is_valid_key(&key) {
            return Err(Error::Config(format!("invalid key `{key}`")));
        }
        if let Some(existing) = self.get(&key) {
            let both_trees =
                matches!(existing, ConfigValue::Tree(_)) && matches!(value, ConfigValue::Tree(_));
            if !both_trees {
                return Err(Error::Config(format!("duplicate key `{key}`")));
            }
        }
        self.entries.push((key, value));
        Ok(())
    }

    pub fn with(mut self, key: &str, value: ConfigValue) -> Self {
        self.push(key, value).expect("valid entry");
        self
    }

    pub fn get(&self, key: &str) -> Option<&ConfigValue> {
        self.entries.iter().find(|(k, _)| k == key).map(|(_, v)| v)
    }

    pub fn get_all<'a>(&'a self, key: &'a str) -> impl Iterator<Item = &'a ConfigValue> + 'a {
        self.entries.iter().filter(move |(k, _)| k == key).map(|(_, v)| v)
    }

    pub fn contains(&self, key: &str) -> bool {
        self.get(key).is_some()
    }

    fn require(&self, key: &str) -> Result<&ConfigValue> {
        self.get(key).ok_or_else(|| Error::MissingKey(key.to_string()))
    }

    pub fn number(&self, key: &str) -> Result<f64> {
        match self.require(key)? {
            ConfigValue::Number(x) => Ok(*x),
            other => Err(type_error(key, "a number", other)),
        }
    }

    pub fn number_or(&self, key: &str, default: f64) -> Result<f64> {
        if self.contains(key) {
            self.number(key)
        } else {
            Ok(default)
        }
    }

    /// A number that must be a non-negative integer.
    pub fn unsigned(&self, key: &str) -> Result<u64> {
        let x = self.number(key)?;
        if x < 0.0 || x.fract() != 0.0 || x > u64::MAX as f64 {
            return Err(Error::Config(format!(
                "`{key}` must be a non-negative integer, got {x}"
            )));
        }
        Ok(x as u64)
    }

    pub fn string(&self, key: &str) -> Result<&str> {
        match self.require(key)? {
            ConfigValue::Str(s) | ConfigValue::Ident(s) => Ok(s),
            other => Err(type_error(key, "a string", other)),
        }
    }

    pub fn boolean(&self, key: &str) -> Result<bool> {
        match self.require(key)? {
            ConfigValue::Ident(s) if s == "true" => Ok(true),
            ConfigValue::Ident(s) if s == "false" => Ok(false),
            other => Err(type_error(key, "true or false", other)),
        }
    }

    pub fn list(&self, key: &str) -> Result<&[f64]> {
        match self.require(key)? {
            ConfigValue::List(v) => Ok(v),
            other => Err(type_error(key, "a list", other)),
        }
    }

    pub fn tree(&self, key: &str) -> Result<&ConfigTree> {
        match self.require(key)? {
            ConfigValue::Tree(t) => Ok(t),
            other => Err(type_error(key, "a nested block", other)),
        }
    }

    /// Reads a vector block `{ size: n data: [...] }`. A bare number is
    /// accepted as a length-one vector.
    pub fn vector(&self, key: &str) -> Result<DVector<f64>> {
        match self.require(key)? {
            ConfigValue::Number(x) => Ok(DVector::from_element(1, *x)),
            ConfigValue::List(v) => Ok(DVector::from_vec(v.clone())),
            ConfigValue::Tree(t) => {
                let data = t.list("data")?;
                if t.contains("size") && t.unsigned("size")? as usize != data.len() {
                    return Err(Error::Config(format!(
                        "`{key}`: size does not match data length {}",
                        data.len()
                    )));
                }
                Ok(DVector::from_vec(data.to_vec()))
            }
            other => Err(type_error(key, "a vector", other)),
        }
    }

    /// Reads a matrix block `{ rows: r cols: c data: [...] rowmajor: bool }`.
    /// `rowmajor` defaults to true.
    pub fn matrix(&self, key: &str) -> Result<DMatrix<f64>> {
        let t = self.tree(key)?;
        let rows = t.unsigned("rows")? as usize;
        let cols = t.unsigned("cols")? as usize;
        let data = t.list("data")?;
        if rows * cols != data.len() {
            return Err(Error::Config(format!(
                "`{key}`: {rows}x{cols} matrix needs {} values, got {}",
                rows * cols,
                data.len()
            )));
        }
        let row_major = if t.contains("rowmajor") { t.boolean("rowmajor")? } else { true };
        Ok(if row_major {
            DMatrix::from_row_slice(rows, cols, data)
        } else {
            DMatrix::from_column_slice(rows, cols, data)
        })
    }

    /// Renders the tree back to text; `parse_config(tree.to_text())`
    /// reproduces the tree.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        self.write_indented(&mut out, 0);
        out
    }

    fn write_indented(&self, out: &mut String, depth: usize) {
        let pad = "  ".repeat(depth);
        for (key, value) in &self.entries {
            match value {
                ConfigValue::Tree(t) => {
                    let _ = writeln!(out, "{pad}{key} {{");
                    t.write_indented(out, depth + 1);
                    let _ = writeln!(out, "{pad}}}");
                }
                ConfigValue::Number(x) => {
                    let _ = writeln!(out, "{pad}{key}: {}", format_number(*x));
                }
                ConfigValue::Str(s) => {
                    let _ = writeln!(out, "{pad}{key}: {}", quote(s));
                }
                ConfigValue::Ident(s) => {
                    let _ = writeln!(out, "{pad}{key}: {s}");
                }
                ConfigValue::List(v) => {
                    let items: Vec<String> = v.iter().map(|x| format_number(*x)).collect();
                    let _ = writeln!(out, "{pad}{key}: [{}]", items.join(", "));
                }
            }
        }
    }
}

impl fmt::Display for ConfigTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text())
    }
}

impl FromStr for ConfigTree {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        parse_config(s)
    }
}

fn type_error(key: &str, expected: &str, found: &ConfigValue) -> Error {
    let kind = match found {
        ConfigValue::Number(_) => "number",
        ConfigValue::Str(_) => "string",
        ConfigValue::Ident(_) => "identifier",
        ConfigValue::List(_) => "list",
        ConfigValue::Tree(_) => "block",
    };
    Error::Config(format!("`{key}` must be {expected}, found a {kind}"))
}

fn format_number(x: f64) -> String {
    // Debug keeps a trailing `.0` on integral values and is round-trip exact.
    format!("{x:?}")
}

fn quote(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\t' => out.push_str("\\t"),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

#[derive(Debug, Clone, PartialEq)]
enum Token {
    Ident(String),
    Number(f64),
    Str(String),
    Colon,
    LBrace,
    RBrace,
    LBracket,
    RBracket,
    Comma,
    Semicolon,
    Eof,
}

impl Token {
    fn describe(&self) -> String {
        match self {
            Token::Ident(s) => format!("identifier `{s}`"),
            Token::Number(x) => format!("number {x}"),
            Token::Str(_) => "string".into(),
            Token::Colon => "`:`".into(),
            Token::LBrace => "`{`".into(),
            Token::RBrace => "`}`".into(),
            Token::LBracket => "`[`".into(),
            Token::RBracket => "`]`".into(),
            Token::Comma => "`,`".into(),
            Token::Semicolon => "`;`".into(),
            Token::Eof => "end of input".into(),
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Pos {
    line: usize,
    column: usize,
}

struct Lexer<'a> {
    chars: std::iter::Peekable<std::str::Chars<'a>>,
    pos: Pos,
}

impl<'a> Lexer<'a> {
    fn new(text: &'a str) -> Self {
        Self {
            chars: text.chars().peekable(),
            pos: Pos { line: 1, column: 1 },
        }
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.chars.next()?;
        if c == '\n' {
            self.pos.line += 1;
            self.pos.column = 1;
        } else {
            self.pos.column += 1;
        }
        Some(c)
    }

    fn error(pos: Pos, message: impl Into<String>) -> Error {
        Error::Syntax {
            line: pos.line,
            column: pos.column,
            message: message.into(),
        }
    }

    fn skip_trivia(&mut self) {
        while let Some(&c) = self.chars.peek() {
            if c.is_whitespace() {
                self.bump();
            } else if c == '#' {
                while let Some(&c) = self.chars.peek() {
                    if c == '\n' {
                        break;
                    }
                    self.bump();
                }
            } else {
                break;
            }
        }
    }

    fn next_token(&mut self) -> Result<(Token, Pos)> {
        self.skip_trivia();
        let start = self.pos;
        let Some(&c) = self.chars.peek() else {
            return Ok((Token::Eof, start));
        };
        let single = match c {
            ':' => Some(Token::Colon),
            '{' => Some(Token::LBrace),
            '}' => Some(Token::RBrace),
            '[' => Some(Token::LBracket),
            ']' => Some(Token::RBracket),
            ',' => Some(Token::Comma),
            ';' => Some(Token::Semicolon),
            _ => None,
        };
        if let Some(tok) = single {
            self.bump();
            return Ok((tok, start));
        }
        if c == '"' {
            self.bump();
            let mut s = String::new();
            loop {
                match self.bump() {
                    None => return Err(Self::error(start, "unterminated string")),
                    Some('"') => break,
                    Some('\\') => match self.bump() {
                        Some('"') => s.push('"'),
                        Some('\\') => s.push('\\'),
                        Some('n') => s.push('\n'),
                        Some('t') => s.push('\t'),
                        Some(other) => {
                            return Err(Self::error(self.pos, format!("unknown escape `\\{other}`")))
                        }
                        None => return Err(Self::error(start, "unterminated string")),
                    },
                    Some(ch) => s.push(ch),
                }
            }
            return Ok((Token::Str(s), start));
        }
        if c.is_ascii_alphabetic() || c == '_' {
            let mut s = String::new();
            while let Some(&ch) = self.chars.peek() {
                if ch.is_ascii_alphanumeric() || ch == '_' {
                    s.push(ch);
                    self.bump();
                } else {
                    break;
                }
            }
            return Ok((Token::Ident(s), start));
        }
        if c.is_ascii_digit() || c == '-' || c == '+' || c == '.' {
            let mut s = String::new();
            while let Some(&ch) = self.chars.peek() {
                let exponent_sign = (ch == '-' || ch == '+') && s.ends_with(['e', 'E']);
                if ch.is_ascii_digit() || ch == '.' || ch == 'e' || ch == 'E' || exponent_sign || s.is_empty() {
                    s.push(ch);
                    self.bump();
                } else {
                    break;
                }
            }
            return s
                .parse::<f64>()
                .map(|x| (Token::Number(x), start))
                .map_err(|_| Self::error(start, format!("invalid number `{s}`")));
        }
        Err(Self::error(start, format!("unexpected character `{c}`")))
    }
}

struct Parser<'a> {
    lexer: Lexer<'a>,
    current: Token,
    current_pos: Pos,
}

impl<'a> Parser<'a> {
    fn new(text: &'a str) -> Result<Self> {
        let mut lexer = Lexer::new(text);
        let (current, current_pos) = lexer.next_token()?;
        Ok(Self {
            lexer,
            current,
            current_pos,
        })
    }

    fn advance(&mut self) -> Result<Token> {
        let (next, pos) = self.lexer.next_token()?;
        self.current_pos = pos;
        Ok(std::mem::replace(&mut self.current, next))
    }

    fn unexpected(&self, expected: &str) -> Error {
        Lexer::error(
            self.current_pos,
            format!("expected {expected}, found {}", self.current.describe()),
        )
    }

    fn parse_entries(&mut self, nested: Option<Pos>) -> Result<ConfigTree> {
        let mut tree = ConfigTree::new();
        loop {
            match &self.current {
                Token::Eof => {
                    if let Some(open) = nested {
                        return Err(Lexer::error(
                            self.current_pos,
                            format!(
                                "unbalanced braces: block opened at line {}, column {} is never closed",
                                open.line, open.column
                            ),
                        ));
                    }
                    return Ok(tree);
                }
                Token::RBrace => {
                    if nested.is_none() {
                        return Err(Lexer::error(self.current_pos, "unbalanced braces: unexpected `}`"));
                    }
                    return Ok(tree);
                }
                Token::Ident(_) => {
                    let key_pos = self.current_pos;
                    let Token::Ident(key) = self.advance()? else { unreachable!() };
                    let value = self.parse_value()?;
                    tree.push(key, value).map_err(|e| match e {
                        Error::Config(msg) => Lexer::error(key_pos, msg),
                        other => other,
                    })?;
                    if matches!(self.current, Token::Comma | Token::Semicolon) {
                        self.advance()?;
                    }
                }
                _ => return Err(self.unexpected("a key")),
            }
        }
    }

    fn parse_block(&mut self) -> Result<ConfigValue> {
        let open = self.current_pos;
        self.advance()?;
        let tree = self.parse_entries(Some(open))?;
        self.advance()?; // closing brace
        Ok(ConfigValue::Tree(tree))
    }

    fn parse_value(&mut self) -> Result<ConfigValue> {
        match self.current {
            Token::LBrace => return self.parse_block(),
            Token::Colon => {
                self.advance()?;
            }
            _ => return Err(self.unexpected("`:` or `{`")),
        }
        match self.current.clone() {
            Token::LBrace => self.parse_block(),
            Token::Number(x) => {
                self.advance()?;
                Ok(ConfigValue::Number(x))
            }
            Token::Str(s) => {
                self.advance()?;
                Ok(ConfigValue::Str(s))
            }
            Token::Ident(s) => {
                self.advance()?;
                Ok(ConfigValue::Ident(s))
            }
            Token::LBracket => {
                self.advance()?;
                let mut values = Vec::new();
                loop {
                    match self.current {
                        Token::RBracket => {
                            self.advance()?;
                            break;
                        }
                        Token::Number(x) => {
                            values.push(x);
                            self.advance()?;
                            match self.current {
                                Token::Comma => {
                                    self.advance()?;
                                }
                                Token::RBracket => {}
                                _ => return Err(self.unexpected("`,` or `]`")),
                            }
                        }
                        _ => return Err(self.unexpected("a number or `]`")),
                    }
                }
                Ok(ConfigValue::List(values))
            }
            _ => Err(self.unexpected("a value")),
        }
    }
}

/// Parses a parameter file into a [`ConfigTree`].
pub fn parse_config(text: &str) -> Result<ConfigTree> {
    let mut parser = Parser::new(text)?;
    parser.parse_entries(None)
}

pub fn read_config_file(path: impl AsRef<std::path::Path>) -> Result<ConfigTree> {
    let text = std::fs::read_to_string(path)?;
    parse_config(&text)
}

/// MCMC drivers selectable through `algo_id`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AlgorithmId {
    Neal2,
    Neal3,
    Neal8,
    BlockedGibbs,
}

impl AlgorithmId {
    pub fn as_str(&self) -> &'static str {
        match self {
            AlgorithmId::Neal2 => "Neal2",
            AlgorithmId::Neal3 => "Neal3",
            AlgorithmId::Neal8 => "Neal8",
            AlgorithmId::BlockedGibbs => "BlockedGibbs",
        }
    }
}

impl FromStr for AlgorithmId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "Neal2" => Ok(AlgorithmId::Neal2),
            "Neal3" => Ok(AlgorithmId::Neal3),
            "Neal8" => Ok(AlgorithmId::Neal8),
            "BlockedGibbs" => Ok(AlgorithmId::BlockedGibbs),
            other => Err(Error::UnknownAlgorithm(other.to_string())),
        }
    }
}

impl fmt::Display for AlgorithmId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

pub const DEFAULT_NEAL8_N_AUX: usize = 3;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AlgoParams {
    pub algo_id: AlgorithmId,
    pub rng_seed: u64,
    pub iterations: usize,
    pub burnin: usize,
    pub init_num_clusters: usize,
    pub neal8_n_aux: usize,
}

pub fn parse_algo_params(tree: &ConfigTree) -> Result<AlgoParams> {
    let algo_id: AlgorithmId = tree.string("algo_id")?.parse()?;
    let rng_seed = tree.unsigned("rng_seed")?;
    let iterations = tree.unsigned("iterations")? as usize;
    let burnin = tree.unsigned("burnin")? as usize;
    let init_num_clusters = tree.unsigned("init_num_clusters")? as usize;
    let neal8_n_aux = if tree.contains("neal8_n_aux") {
        tree.unsigned("neal8_n_aux")? as usize
    } else {
        DEFAULT_NEAL8_N_AUX
    };
    if iterations == 0 {
        return Err(Error::Config("iterations must be positive".into()));
    }
    if burnin >= iterations {
        return Err(Error::Config(format!(
            "burnin ({burnin}) must be smaller than iterations ({iterations})"
        )));
    }
    if init_num_clusters == 0 {
        return Err(Error::Config("init_num_clusters must be positive".into()));
    }
    if neal8_n_aux == 0 {
        return Err(Error::Config("neal8_n_aux must be positive".into()));
    }
    Ok(AlgoParams {
        algo_id,
        rng_seed,
        iterations,
        burnin,
        init_num_clusters,
        neal8_n_aux,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const ALGO_FILE: &str = r#"
algo_id: "Neal2"
rng_seed: 20201124
iterations: 1500
burnin: 500
init_num_clusters: 3
"#;

    #[test]
    fn parses_single_nested_value() {
        let tree = parse_config("fixed_value { totalmass: 1.0 }").unwrap();
        let inner = tree.tree("fixed_value").unwrap();
        assert_eq!(inner.number("totalmass").unwrap(), 1.0);
        assert_eq!(tree.len(), 1);
    }

    #[test]
    fn empty_input_is_empty_tree() {
        assert!(parse_config("").unwrap().is_empty());
        assert!(parse_config("  # only a comment\n").unwrap().is_empty());
    }

    #[test]
    fn parses_vector_block() {
        let tree = parse_config("mean { size: 2 data: [3.484, 3.487] }").unwrap();
        let mean = tree.tree("mean").unwrap();
        assert_eq!(mean.list("data").unwrap(), &[3.484, 3.487]);
        assert_eq!(tree.vector("mean").unwrap().as_slice(), &[3.484, 3.487]);
    }

    #[test]
    fn parses_bivariate_prior_file() {
        let text = r#"
fixed_values {
    mean {
        size: 2
        data: [3.484, 3.487]
    }
    var_scaling: 0.01
    deg_free: 5
    scale {
        rows: 2
        cols: 2
        data: [1.0, 2.0, 3.0, 4.0]
        rowmajor: false
    }
}
"#;
        let tree = parse_config(text).unwrap();
        let fv = tree.tree("fixed_values").unwrap();
        assert_eq!(fv.number("deg_free").unwrap(), 5.0);
        let scale = fv.matrix("scale").unwrap();
        // column-major: first column is (1, 2)
        assert_eq!(scale[(1, 0)], 2.0);
        assert_eq!(scale[(0, 1)], 3.0);
    }

    #[test]
    fn comma_separated_entries_and_comments() {
        let tree = parse_config("fixed_values { strength: 1.0, discount: 0.1 } # trailing").unwrap();
        let fv = tree.tree("fixed_values").unwrap();
        assert_eq!(fv.number("discount").unwrap(), 0.1);
    }

    #[test]
    fn escaped_quotes_in_strings() {
        let tree = parse_config(r#"name: "a \"quoted\" word""#).unwrap();
        assert_eq!(tree.string("name").unwrap(), "a \"quoted\" word");
    }

    #[test]
    fn duplicate_scalar_key_is_rejected() {
        let err = parse_config("a: 1\na: 2").unwrap_err();
        assert!(matches!(err, Error::Syntax { line: 2, column: 1, .. }), "{err}");
    }

    #[test]
    fn repeated_blocks_are_allowed() {
        let tree = parse_config("c { x: 1 } c { x: 2 }").unwrap();
        assert_eq!(tree.get_all("c").count(), 2);
    }

    #[test]
    fn unbalanced_braces_report_position() {
        match parse_config("a {\n  b: 1\n").unwrap_err() {
            Error::Syntax { line, message, .. } => {
                assert_eq!(line, 3);
                assert!(message.contains("unbalanced"));
            }
            other => panic!("unexpected error {other}"),
        }
        match parse_config("a: 1\n}").unwrap_err() {
            Error::Syntax { line, column, .. } => assert_eq!((line, column), (2, 1)),
            other => panic!("unexpected error {other}"),
        }
    }

    #[test]
    fn syntax_errors_carry_position() {
        match parse_config("a: 1\nb 2").unwrap_err() {
            Error::Syntax { line, column, .. } => assert_eq!((line, column), (2, 3)),
            other => panic!("unexpected error {other}"),
        }
    }

    #[test]
    fn paper_algo_file() {
        let params = parse_algo_params(&parse_config(ALGO_FILE).unwrap()).unwrap();
        assert_eq!(
            params,
            AlgoParams {
                algo_id: AlgorithmId::Neal2,
                rng_seed: 20201124,
                iterations: 1500,
                burnin: 500,
                init_num_clusters: 3,
                neal8_n_aux: 3,
            }
        );
    }

    #[test]
    fn burnin_must_be_below_iterations() {
        let text = ALGO_FILE.replace("iterations: 1500", "iterations: 10").replace("burnin: 500", "burnin: 10");
        assert!(matches!(
            parse_algo_params(&parse_config(&text).unwrap()),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn unknown_algorithm() {
        let text = ALGO_FILE.replace("Neal2", "Neal9");
        assert!(matches!(
            parse_algo_params(&parse_config(&text).unwrap()),
            Err(Error::UnknownAlgorithm(name)) if name == "Neal9"
        ));
    }

    #[test]
    fn missing_key() {
        let text = ALGO_FILE.replace("rng_seed: 20201124", "");
        assert!(matches!(
            parse_algo_params(&parse_config(&text).unwrap()),
            Err(Error::MissingKey(k)) if k == "rng_seed"
        ));
    }

    fn arb_key() -> impl Strategy<Value = String> {
        "[A-Za-z_][A-Za-z0-9_]{0,6}"
    }

    fn arb_number() -> impl Strategy<Value = f64> {
        prop_oneof![
            -1e6..1e6f64,
            (-1000i64..1000).prop_map(|x| x as f64),
            proptest::num::f64::NORMAL,
        ]
    }

    fn arb_leaf() -> impl Strategy<Value = ConfigValue> {
        prop_oneof![
            arb_number().prop_map(ConfigValue::Number),
            "[ -~]{0,8}".prop_map(ConfigValue::Str),
            prop_oneof![Just("true"), Just("false"), Just("NNIG")].prop_map(|s| ConfigValue::Ident(s.into())),
            prop::collection::vec(arb_number(), 0..5).prop_map(ConfigValue::List),
        ]
    }

    fn arb_tree() -> impl Strategy<Value = ConfigTree> {
        let leaf_entries = prop::collection::vec((arb_key(), arb_leaf()), 0..5);
        leaf_entries
            .prop_map(build_tree)
            .prop_recursive(3, 24, 4, |inner| {
                prop::collection::vec(
                    (arb_key(), prop_oneof![arb_leaf(), inner.prop_map(ConfigValue::Tree)]),
                    0..5,
                )
                .prop_map(build_tree)
            })
    }

    fn build_tree(entries: Vec<(String, ConfigValue)>) -> ConfigTree {
        let mut tree = ConfigTree::new();
        for (k, v) in entries {
            // invalid duplicates are dropped; the generator only needs valid trees
            let _ = tree.push(k, v);
        }
        tree
    }

    proptest! {
        #[test]
        fn serialize_parse_round_trip(tree in arb_tree()) {
            let text = tree.to_text();
            let parsed = parse_config(&text).unwrap();
            prop_assert_eq!(parsed, tree);
        }
    }
}
