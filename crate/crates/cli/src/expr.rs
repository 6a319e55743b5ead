//! Observable expressions: `c*q^B*p^N` terms joined by `+` or `-`.

use std::fmt;

use affquant::quantize::{Monomial, Observable, PositionFn};

/// Highest momentum power accepted.
pub const MAX_P_POWER: u32 = 8;

#[derive(Debug, Clone, PartialEq)]
pub struct ParseError {
    /// 1-based character column in the original text.
    pub column: usize,
    pub message: String,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "column {}: {}", self.column, self.message)
    }
}

impl std::error::Error for ParseError {}

struct Parser {
    /// Non-blank characters with their original columns.
    chars: Vec<(usize, char)>,
    pos: usize,
    end_column: usize,
}

impl Parser {
    fn new(text: &str) -> Self {
        let chars: Vec<(usize, char)> =
            text.chars().enumerate().filter(|(_, c)| !c.is_whitespace()).map(|(i, c)| (i + 1, c)).collect();
        Parser { chars, pos: 0, end_column: text.chars().count() + 1 }
    }

    fn peek(&self) -> Option<char> {
        self.chars.get(self.pos).map(|&(_, c)| c)
    }

    fn column(&self) -> usize {
        self.chars.get(self.pos).map_or(self.end_column, |&(c, _)| c)
    }

    fn error<T>(&self, message: impl Into<String>) -> Result<T, ParseError> {
        Err(ParseError { column: self.column(), message: message.into() })
    }

    fn describe_here(&self) -> String {
        match self.peek() {
            Some(c) => format!("'{c}'"),
            None => "end of input".into(),
        }
    }

    fn eat(&mut self, c: char) -> bool {
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    /// Unsigned decimal literal with optional fraction and exponent.
    fn number(&mut self) -> Result<(f64, String), ParseError> {
        let start = self.pos;
        let mut text = String::new();
        let mut digits = 0;
        while let Some(c) = self.peek() {
            if c.is_ascii_digit() {
                digits += 1;
            } else if c != '.' {
                break;
            }
            text.push(c);
            self.pos += 1;
        }
        if digits == 0 {
            self.pos = start;
            return self.error(format!("expected a number, found {}", self.describe_here()));
        }
        if matches!(self.peek(), Some('e' | 'E')) {
            let save = self.pos;
            let mut exp = String::from("e");
            self.pos += 1;
            if let Some(s @ ('+' | '-')) = self.peek() {
                exp.push(s);
                self.pos += 1;
            }
            let mut n = 0;
            while let Some(c) = self.peek().filter(char::is_ascii_digit) {
                exp.push(c);
                self.pos += 1;
                n += 1;
            }
            if n == 0 {
                self.pos = save;
                return self.error("malformed exponent");
            }
            text.push_str(&exp);
        }
        match text.parse::<f64>() {
            Ok(v) => Ok((v, text)),
            Err(_) => {
                self.pos = start;
                self.error(format!("malformed number '{text}'"))
            }
        }
    }

    /// Exponent after `^`: optionally signed and parenthesized.
    fn exponent(&mut self) -> Result<(f64, String, usize), ParseError> {
        let paren = self.eat('(');
        let column = self.column();
        let negative = if self.eat('-') {
            true
        } else {
            self.eat('+');
            false
        };
        let (v, text) = self.number()?;
        if paren && !self.eat(')') {
            return self.error(format!("expected ')', found {}", self.describe_here()));
        }
        Ok((if negative { -v } else { v }, text, column))
    }

    fn term(&mut self, sign: f64) -> Result<Monomial, ParseError> {
        let mut m = Monomial { coeff: sign, beta: 0.0, n: 0 };
        loop {
            match self.peek() {
                Some(c) if c.is_ascii_digit() || c == '.' => {
                    let (v, _) = self.number()?;
                    m.coeff *= v;
                }
                Some('q') => {
                    self.pos += 1;
                    if self.peek() == Some('p') {
                        self.pos += 1;
                        m.beta += 1.0;
                        m.n += 1;
                    } else if self.eat('^') {
                        let (b, _, _) = self.exponent()?;
                        m.beta += b;
                    } else {
                        m.beta += 1.0;
                    }
                }
                Some('p') => {
                    self.pos += 1;
                    let n = if self.eat('^') {
                        let (v, text, column) = self.exponent()?;
                        if v < 0.0 || v.fract() != 0.0 || text.contains(['.', 'e', 'E']) {
                            return Err(ParseError {
                                column,
                                message: format!("momentum power must be a non-negative integer, got {v}"),
                            });
                        }
                        v as u32
                    } else {
                        1
                    };
                    m.n += n;
                }
                _ => return self.error(format!("expected a number, 'q' or 'p', found {}", self.describe_here())),
            }
            if !self.eat('*') {
                break;
            }
        }
        Ok(m)
    }

    fn parse(&mut self) -> Result<Vec<Monomial>, ParseError> {
        if self.chars.is_empty() {
            return self.error("empty expression");
        }
        let mut terms = Vec::new();
        let mut sign = if self.eat('-') {
            -1.0
        } else {
            self.eat('+');
            1.0
        };
        loop {
            let column = self.column();
            let m = self.term(sign)?;
            if m.n > MAX_P_POWER {
                return Err(ParseError {
                    column,
                    message: format!("unsupported power p^{} (at most p^{MAX_P_POWER})", m.n),
                });
            }
            terms.push(m);
            sign = match self.peek() {
                None => break,
                Some('+') => 1.0,
                Some('-') => -1.0,
                Some(_) => return self.error(format!("expected '+', '-' or '*', found {}", self.describe_here())),
            };
            self.pos += 1;
        }
        Ok(terms)
    }
}

/// Parses an observable expression.
pub fn parse_observable(text: &str) -> Result<Observable, ParseError> {
    let terms = Parser::new(text).parse()?;
    Ok(match terms.as_slice() {
        [Monomial { coeff, beta, n }] if *coeff == 1.0 => match (*beta, *n) {
            (b, 0) => Observable::PositionFn(PositionFn::power(b)),
            (b, 1) if b == 1.0 => Observable::Dilation,
            (b, 2) if b == 0.0 => Observable::Kinetic,
            (b, n) if b == 0.0 => Observable::MomentumPower(n),
            _ => Observable::MonomialSum(terms),
        },
        _ => Observable::MonomialSum(terms),
    })
}
