use num_bigint::BigInt;

use super::LangError;

#[derive(Clone, Debug, PartialEq, Eq)]
pub(crate) enum Tok {
    UName(String),
    LName(String),
    Int(BigInt),
    Inductive,
    Let,
    Match,
    With,
    End,
    Goal,
    If,
    Then,
    Else,
    True,
    False,
    Int_,
    Bool_,
    LParen,
    RParen,
    Colon,
    Semi,
    Dot,
    Bar,
    Arrow,
    Assign,
    Plus,
    Minus,
    Star,
    Le,
    Lt,
    EqEq,
    AndAnd,
    OrOr,
    Bang,
    Eof,
}

#[derive(Clone, Debug)]
pub(crate) struct Token {
    pub tok: Tok,
    pub line: usize,
    pub col: usize,
}

pub(crate) fn lex(src: &str) -> Result<Vec<Token>, LangError> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);
    let err = |line, col, message: String| LangError::Syntax { line, col, message };

    while i < chars.len() {
        let c = chars[i];
        if c == '\n' {
            i += 1;
            line += 1;
            col = 1;
            continue;
        }
        if c.is_whitespace() {
            i += 1;
            col += 1;
            continue;
        }
        // `--` line comment
        if c == '-' && chars.get(i + 1) == Some(&'-') {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
            }
            continue;
        }
        let (start_line, start_col) = (line, col);
        let two: String = chars[i..(i + 2).min(chars.len())].iter().collect();
        let tok = match two.as_str() {
            "->" => Some(Tok::Arrow),
            "<=" => Some(Tok::Le),
            "==" => Some(Tok::EqEq),
            "&&" => Some(Tok::AndAnd),
            "||" => Some(Tok::OrOr),
            _ => None,
        };
        if let Some(tok) = tok {
            out.push(Token {
                tok,
                line: start_line,
                col: start_col,
            });
            i += 2;
            col += 2;
            continue;
        }
        let single = match c {
            '(' => Some(Tok::LParen),
            ')' => Some(Tok::RParen),
            ':' => Some(Tok::Colon),
            ';' => Some(Tok::Semi),
            '.' => Some(Tok::Dot),
            '|' => Some(Tok::Bar),
            '=' => Some(Tok::Assign),
            '+' => Some(Tok::Plus),
            '-' => Some(Tok::Minus),
            '*' => Some(Tok::Star),
            '<' => Some(Tok::Lt),
            '!' => Some(Tok::Bang),
            _ => None,
        };
        if let Some(tok) = single {
            out.push(Token {
                tok,
                line: start_line,
                col: start_col,
            });
            i += 1;
            col += 1;
            continue;
        }
        if c.is_ascii_digit() {
            let start = i;
            while i < chars.len() && chars[i].is_ascii_digit() {
                i += 1;
            }
            let text: String = chars[start..i].iter().collect();
            col += i - start;
            let value: BigInt = text
                .parse()
                .map_err(|_| err(start_line, start_col, format!("bad integer `{text}`")))?;
            out.push(Token {
                tok: Tok::Int(value),
                line: start_line,
                col: start_col,
            });
            continue;
        }
        if c.is_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len()
                && (chars[i].is_alphanumeric() || chars[i] == '_' || chars[i] == '\'')
            {
                i += 1;
            }
            let text: String = chars[start..i].iter().collect();
            col += i - start;
            let tok = match text.as_str() {
                "Inductive" => Tok::Inductive,
                "Let" => Tok::Let,
                "match" => Tok::Match,
                "with" => Tok::With,
                "end" => Tok::End,
                "Goal" => Tok::Goal,
                "if" => Tok::If,
                "then" => Tok::Then,
                "else" => Tok::Else,
                "true" => Tok::True,
                "false" => Tok::False,
                "Int" => Tok::Int_,
                "Bool" => Tok::Bool_,
                _ if c.is_uppercase() => Tok::UName(text),
                _ => Tok::LName(text),
            };
            out.push(Token {
                tok,
                line: start_line,
                col: start_col,
            });
            continue;
        }
        return Err(err(line, col, format!("unexpected character `{c}`")));
    }
    out.push(Token {
        tok: Tok::Eof,
        line,
        col,
    });
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lexes_operators_and_comments() {
        let toks: Vec<Tok> = lex("a <= b -- comment\n|| !c -> x'")
            .unwrap()
            .into_iter()
            .map(|t| t.tok)
            .collect();
        assert_eq!(
            toks,
            vec![
                Tok::LName("a".into()),
                Tok::Le,
                Tok::LName("b".into()),
                Tok::OrOr,
                Tok::Bang,
                Tok::LName("c".into()),
                Tok::Arrow,
                Tok::LName("x'".into()),
                Tok::Eof
            ]
        );
    }

    #[test]
    fn reports_position_of_bad_character() {
        match lex("Goal .\n  #") {
            Err(LangError::Syntax { line, col, .. }) => assert_eq!((line, col), (2, 3)),
            other => panic!("unexpected {other:?}"),
        }
    }
}
