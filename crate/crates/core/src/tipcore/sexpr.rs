use super::TipError;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SExpr {
    Atom { text: String, line: usize, col: usize },
    List { items: Vec<SExpr>, line: usize, col: usize },
}

impl SExpr {
    pub fn pos(&self) -> (usize, usize) {
        match self {
            SExpr::Atom { line, col, .. } | SExpr::List { line, col, .. } => (*line, *col),
        }
    }

    pub fn atom(&self) -> Option<&str> {
        match self {
            SExpr::Atom { text, .. } => Some(text),
            SExpr::List { .. } => None,
        }
    }

    pub fn list(&self) -> Option<&[SExpr]> {
        match self {
            SExpr::List { items, .. } => Some(items),
            SExpr::Atom { .. } => None,
        }
    }
}

/// Reads every top-level S-expression; `;` starts a line comment.
pub fn parse_sexprs(src: &str) -> Result<Vec<SExpr>, TipError> {
    let mut stack: Vec<(Vec<SExpr>, usize, usize)> = vec![(Vec::new(), 0, 0)];
    let (mut line, mut col) = (1usize, 1usize);
    let mut chars = src.chars().peekable();
    while let Some(c) = chars.next() {
        let (l0, c0) = (line, col);
        let advance = |c: char, line: &mut usize, col: &mut usize| {
            if c == '\n' {
                *line += 1;
                *col = 1;
            } else {
                *col += 1;
            }
        };
        advance(c, &mut line, &mut col);
        match c {
            ';' => {
                while let Some(&n) = chars.peek() {
                    if n == '\n' {
                        break;
                    }
                    chars.next();
                    col += 1;
                }
            }
            '(' => stack.push((Vec::new(), l0, c0)),
            ')' => {
                if stack.len() == 1 {
                    return Err(TipError::SExpr { line: l0, col: c0, message: "unbalanced `)`".into() });
                }
                let (items, l, cc) = stack.pop().expect("checked depth");
                stack.last_mut().expect("root frame").0.push(SExpr::List { items, line: l, col: cc });
            }
            c if c.is_whitespace() => {}
            '"' => {
                let mut text = String::from('"');
                loop {
                    match chars.next() {
                        None => return Err(TipError::SExpr { line: l0, col: c0, message: "unterminated string".into() }),
                        Some(n) => {
                            advance(n, &mut line, &mut col);
                            text.push(n);
                            if n == '"' {
                                break;
                            }
                        }
                    }
                }
                stack.last_mut().expect("root frame").0.push(SExpr::Atom { text, line: l0, col: c0 });
            }
            _ => {
                let mut text = String::from(c);
                while let Some(&n) = chars.peek() {
                    if n.is_whitespace() || n == '(' || n == ')' || n == ';' {
                        break;
                    }
                    text.push(n);
                    chars.next();
                    col += 1;
                }
                stack.last_mut().expect("root frame").0.push(SExpr::Atom { text, line: l0, col: c0 });
            }
        }
    }
    if stack.len() > 1 {
        let (_, l, c) = stack.pop().expect("checked depth");
        return Err(TipError::SExpr { line: l, col: c, message: "unclosed `(`".into() });
    }
    Ok(stack.pop().expect("root frame").0)
}
