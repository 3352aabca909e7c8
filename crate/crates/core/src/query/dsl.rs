//! A one-line query language that bypasses natural-language parsing.
//!
//! ```text
//! query    := shape clause*
//! shape    := "point" "(" coord (";" coord)* ")" ["radius" length]
//!           | "route" "(" coord ";" coord ")" ["buffer" length]
//!           | "region" "(" string ")"
//! coord    := number "," number            (lon, lat in degrees)
//! length   := number ("km" | "m")
//! clause   := "category" word | "text" string
//! ```
//!
//! Keywords are case-insensitive. A missing radius or buffer takes the
//! default for the query kind. `text` supplies free text for the semantic
//! side of the query.

use thiserror::Error;

use super::{split_intent, QueryError, QueryIntent, QueryKind, SpatialQuery};
use crate::category::Category;
use crate::corpus::Gazetteer;
use crate::geometry::{Coord, Length};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("{line}:{column}: {message}")]
pub struct DslError {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq)]
pub enum DslShape {
    Points(Vec<Coord>),
    Route(Coord, Coord),
    Region(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct DslQuery {
    pub shape: DslShape,
    pub eps: Option<Length>,
    pub category: Option<Category>,
    pub text: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Word(String),
    Number(f64),
    Str(String),
    Punct(char),
    End,
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    line: usize,
    column: usize,
}

fn lex(src: &str) -> Result<Vec<Token>, DslError> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0, 1, 1);
    let err = |line, column, message: String| DslError { line, column, message };
    while i < chars.len() {
        let ch = chars[i];
        let (start_line, start_col) = (line, col);
        if ch == '\n' {
            i += 1;
            line += 1;
            col = 1;
            continue;
        }
        if ch.is_whitespace() {
            i += 1;
            col += 1;
            continue;
        }
        let tok = if "(),;".contains(ch) {
            i += 1;
            col += 1;
            Tok::Punct(ch)
        } else if ch == '"' {
            let mut s = String::new();
            i += 1;
            col += 1;
            loop {
                match chars.get(i) {
                    None | Some('\n') => return Err(err(start_line, start_col, "unterminated string".into())),
                    Some('"') => {
                        i += 1;
                        col += 1;
                        break;
                    }
                    Some('\\') if matches!(chars.get(i + 1), Some('"') | Some('\\')) => {
                        s.push(chars[i + 1]);
                        i += 2;
                        col += 2;
                    }
                    Some(&c) => {
                        s.push(c);
                        i += 1;
                        col += 1;
                    }
                }
            }
            Tok::Str(s)
        } else if ch.is_ascii_digit() || ch == '-' || ch == '+' || ch == '.' {
            let begin = i;
            i += 1;
            while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                i += 1;
            }
            let text: String = chars[begin..i].iter().collect();
            col += i - begin;
            let value = text
                .parse::<f64>()
                .map_err(|_| err(start_line, start_col, format!("invalid number {text:?}")))?;
            Tok::Number(value)
        } else if ch.is_alphabetic() || ch == '_' {
            let begin = i;
            while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_' || chars[i] == '-') {
                i += 1;
            }
            col += i - begin;
            Tok::Word(chars[begin..i].iter().collect())
        } else {
            return Err(err(start_line, start_col, format!("unexpected character {ch:?}")));
        };
        out.push(Token {
            tok,
            line: start_line,
            column: start_col,
        });
    }
    out.push(Token {
        tok: Tok::End,
        line,
        column: col,
    });
    Ok(out)
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Token {
        &self.tokens[self.pos]
    }

    fn next(&mut self) -> Token {
        let t = self.tokens[self.pos].clone();
        if !matches!(t.tok, Tok::End) {
            self.pos += 1;
        }
        t
    }

    fn fail<T>(&self, at: &Token, message: impl Into<String>) -> Result<T, DslError> {
        Err(DslError {
            line: at.line,
            column: at.column,
            message: message.into(),
        })
    }

    fn describe(tok: &Tok) -> String {
        match tok {
            Tok::Word(w) => format!("{w:?}"),
            Tok::Number(n) => n.to_string(),
            Tok::Str(s) => format!("string {s:?}"),
            Tok::Punct(c) => format!("'{c}'"),
            Tok::End => "end of input".into(),
        }
    }

    fn expect_punct(&mut self, c: char) -> Result<(), DslError> {
        let t = self.next();
        if t.tok == Tok::Punct(c) {
            Ok(())
        } else {
            self.fail(&t, format!("expected '{c}', found {}", Self::describe(&t.tok)))
        }
    }

    fn number(&mut self) -> Result<(f64, Token), DslError> {
        let t = self.next();
        match t.tok {
            Tok::Number(n) => Ok((n, t)),
            _ => self.fail(&t, format!("expected a number, found {}", Self::describe(&t.tok))),
        }
    }

    fn string(&mut self) -> Result<String, DslError> {
        let t = self.next();
        match t.tok {
            Tok::Str(s) => Ok(s),
            _ => self.fail(&t, format!("expected a quoted string, found {}", Self::describe(&t.tok))),
        }
    }

    fn coord(&mut self) -> Result<Coord, DslError> {
        let (lon, at) = self.number()?;
        self.expect_punct(',')?;
        let (lat, _) = self.number()?;
        Coord::new(lon, lat).or_else(|e| self.fail(&at, e.to_string()))
    }

    fn coord_list(&mut self) -> Result<Vec<Coord>, DslError> {
        self.expect_punct('(')?;
        let mut coords = vec![self.coord()?];
        while self.peek().tok == Tok::Punct(';') {
            self.next();
            coords.push(self.coord()?);
        }
        self.expect_punct(')')?;
        Ok(coords)
    }

    fn length(&mut self) -> Result<Length, DslError> {
        let (value, at) = self.number()?;
        if !(value > 0.0) {
            return self.fail(&at, "distance must be positive");
        }
        let t = self.next();
        match &t.tok {
            Tok::Word(u) if u.eq_ignore_ascii_case("km") => Ok(Length::from_km(value)),
            Tok::Word(u) if u.eq_ignore_ascii_case("m") => Ok(Length::from_meters(value)),
            other => self.fail(&t, format!("expected unit 'km' or 'm', found {}", Self::describe(other))),
        }
    }

    fn keyword(&mut self) -> Result<(String, Token), DslError> {
        let t = self.next();
        match &t.tok {
            Tok::Word(w) => Ok((w.to_lowercase(), t)),
            other => self.fail(&t, format!("expected a keyword, found {}", Self::describe(other))),
        }
    }

    fn query(&mut self) -> Result<DslQuery, DslError> {
        let (kw, at) = self.keyword()?;
        let mut eps = None;
        let shape = match kw.as_str() {
            "point" => {
                let coords = self.coord_list()?;
                if matches!(&self.peek().tok, Tok::Word(w) if w.eq_ignore_ascii_case("radius")) {
                    self.next();
                    eps = Some(self.length()?);
                }
                DslShape::Points(coords)
            }
            "route" => {
                let open = self.peek().clone();
                let coords = self.coord_list()?;
                if coords.len() != 2 {
                    return self.fail(&open, format!("route needs exactly 2 points, got {}", coords.len()));
                }
                if matches!(&self.peek().tok, Tok::Word(w) if w.eq_ignore_ascii_case("buffer")) {
                    self.next();
                    eps = Some(self.length()?);
                }
                DslShape::Route(coords[0], coords[1])
            }
            "region" => {
                self.expect_punct('(')?;
                let name = self.string()?;
                self.expect_punct(')')?;
                DslShape::Region(name)
            }
            other => return self.fail(&at, format!("expected point, route or region, found {other:?}")),
        };
        let mut query = DslQuery {
            shape,
            eps,
            category: None,
            text: None,
        };
        loop {
            if self.peek().tok == Tok::End {
                break;
            }
            let (kw, at) = self.keyword()?;
            match kw.as_str() {
                "category" => {
                    let t = self.next();
                    let word = match &t.tok {
                        Tok::Word(w) => w.clone(),
                        Tok::Str(s) => s.clone(),
                        other => return self.fail(&t, format!("expected a category, found {}", Self::describe(other))),
                    };
                    query.category = Some(word.parse().or_else(|e: crate::category::UnknownCategory| self.fail(&t, e.to_string()))?);
                }
                "text" => query.text = Some(self.string()?),
                "radius" | "buffer" => return self.fail(&at, format!("{kw} does not apply to this shape")),
                other => return self.fail(&at, format!("unknown clause {other:?}")),
            }
        }
        Ok(query)
    }
}

pub fn parse_dsl(src: &str) -> Result<DslQuery, DslError> {
    let tokens = lex(src)?;
    Parser { tokens, pos: 0 }.query()
}

impl DslQuery {
    /// Builds the spatial query, resolving region names through the
    /// gazetteer. The `text` clause (or `raw`, when absent) feeds the intent.
    pub fn into_spatial_query(self, gazetteer: &Gazetteer, raw: &str) -> Result<(SpatialQuery, QueryIntent), QueryError> {
        let question = self.text.clone().unwrap_or_default();
        let raw_question = if question.is_empty() { raw.to_string() } else { question.clone() };
        let sq = match self.shape {
            DslShape::Points(points) => {
                let eps = self.eps.or(QueryKind::PointRadius.default_eps()).expect("default");
                SpatialQuery::point_radius(&points, eps, self.category, raw_question)?
            }
            DslShape::Route(a, b) => {
                let eps = self.eps.or(QueryKind::RouteBuffer.default_eps()).expect("default");
                SpatialQuery::route_buffer(a, b, eps, self.category, raw_question)?
            }
            DslShape::Region(name) => {
                let entry = gazetteer.get(&name).ok_or_else(|| QueryError::UnknownRegion(name.clone()))?;
                SpatialQuery::region_contain(entry.name.clone(), entry.polygon.clone(), self.category, raw_question)?
            }
        };
        let mut intent = split_intent(&question);
        intent.target_category = self.category;
        Ok((sq, intent))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_the_three_shapes() {
        let q = parse_dsl("point(-73.98,40.75) radius 1.0km category restaurant").unwrap();
        assert_eq!(q.shape, DslShape::Points(vec![Coord::new(-73.98, 40.75).unwrap()]));
        assert_eq!(q.eps, Some(Length::from_km(1.0)));
        assert_eq!(q.category, Some(Category::Restaurant));

        let q = parse_dsl("route(-74.0,40.74 ; -73.99,40.76) buffer 1000m category cafe").unwrap();
        assert!(matches!(q.shape, DslShape::Route(..)));
        assert_eq!(q.eps.unwrap().meters(), 1000.0);
        assert_eq!(q.category, Some(Category::Restaurant));

        let q = parse_dsl(r#"REGION("manhattan") category restaurant text "cheap \"real\" pizza""#).unwrap();
        assert_eq!(q.shape, DslShape::Region("manhattan".into()));
        assert_eq!(q.text.as_deref(), Some(r#"cheap "real" pizza"#));
    }

    #[test]
    fn errors_carry_line_and_column() {
        let e = parse_dsl("point(-73.98 40.75)").unwrap_err();
        assert_eq!((e.line, e.column), (1, 14));
        let e = parse_dsl("point(1,2)\n  radius 5 furlongs").unwrap_err();
        assert_eq!((e.line, e.column), (2, 12));
        assert!(e.message.contains("unit"), "{e}");
        let e = parse_dsl("route(1,2) buffer 100m").unwrap_err();
        assert_eq!((e.line, e.column), (1, 6));
        let e = parse_dsl("point(1,2) category spaceport").unwrap_err();
        assert_eq!((e.line, e.column), (1, 21));
        let e = parse_dsl("region(\"x) ").unwrap_err();
        assert_eq!((e.line, e.column), (1, 8));
        let e = parse_dsl("polygon(1,2)").unwrap_err();
        assert_eq!((e.line, e.column), (1, 1));
        let e = parse_dsl("point(500,2)").unwrap_err();
        assert_eq!((e.line, e.column), (1, 7));
    }

    #[test]
    fn defaults_and_region_resolution() {
        let g = Gazetteer::default();
        let (sq, intent) = parse_dsl("point(1,2)").unwrap().into_spatial_query(&g, "point(1,2)").unwrap();
        assert_eq!(sq.eps(), Some(Length::from_km(1.0)));
        assert_eq!(intent, QueryIntent::default());
        let (sq, _) = parse_dsl("route(1,2;1.01,2)").unwrap().into_spatial_query(&g, "").unwrap();
        assert_eq!(sq.eps(), Some(Length::from_meters(2000.0)));
        let err = parse_dsl("region(\"nowhere\")").unwrap().into_spatial_query(&g, "").unwrap_err();
        assert_eq!(err, QueryError::UnknownRegion("nowhere".into()));
    }
}
