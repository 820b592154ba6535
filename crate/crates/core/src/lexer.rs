//! Maude-style tokenizer: whitespace separates tokens, the characters
//! `( ) [ ] { } ,` always stand alone, and `***` or `---` start a comment.

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Token {
    pub text: String,
    pub line: usize,
    pub col: usize,
}

impl Token {
    pub fn is(&self, s: &str) -> bool {
        self.text == s
    }
}

fn is_special(c: char) -> bool {
    matches!(c, '(' | ')' | '[' | ']' | '{' | '}' | ',')
}

/// Splits a whitespace-free word at the special characters.
pub fn split_special(word: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut cur = String::new();
    for c in word.chars() {
        if is_special(c) {
            if !cur.is_empty() {
                out.push(std::mem::take(&mut cur));
            }
            out.push(c.to_string());
        } else {
            cur.push(c);
        }
    }
    if !cur.is_empty() {
        out.push(cur);
    }
    out
}

pub fn tokenize(text: &str) -> Vec<Token> {
    let mut out = Vec::new();
    let chars: Vec<char> = text.chars().collect();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);
    let starts_comment = |i: usize| {
        i + 3 <= chars.len() && {
            let a: String = chars[i..i + 3].iter().collect();
            a == "***" || a == "---"
        }
    };
    while i < chars.len() {
        let c = chars[i];
        if c == '\n' {
            line += 1;
            col = 1;
            i += 1;
            continue;
        }
        if c.is_whitespace() {
            i += 1;
            col += 1;
            continue;
        }
        if starts_comment(i) {
            if chars.get(i + 3) == Some(&'(') {
                // Parenthesized comment, possibly spanning lines.
                let mut depth = 0;
                while i < chars.len() {
                    let d = chars[i];
                    i += 1;
                    col += 1;
                    if d == '\n' {
                        line += 1;
                        col = 1;
                    } else if d == '(' {
                        depth += 1;
                    } else if d == ')' {
                        depth -= 1;
                        if depth == 0 {
                            break;
                        }
                    }
                }
            } else {
                while i < chars.len() && chars[i] != '\n' {
                    i += 1;
                }
            }
            continue;
        }
        if is_special(c) {
            out.push(Token { text: c.to_string(), line, col });
            i += 1;
            col += 1;
            continue;
        }
        let (start_line, start_col) = (line, col);
        let mut word = String::new();
        while i < chars.len() && !chars[i].is_whitespace() && !is_special(chars[i]) {
            word.push(chars[i]);
            i += 1;
            col += 1;
        }
        if word.len() > 1 && word.ends_with('.') && word != "s.t." {
            word.pop();
            let dot_col = col - 1;
            out.push(Token { text: word, line: start_line, col: start_col });
            out.push(Token { text: ".".into(), line, col: dot_col });
        } else {
            out.push(Token { text: word, line: start_line, col: start_col });
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn texts(s: &str) -> Vec<String> {
        tokenize(s).into_iter().map(|t| t.text).collect()
    }

    #[test]
    fn specials_split() {
        assert_eq!(texts("move(s(N), M)"), ["move", "(", "s", "(", "N", ")", ",", "M", ")"]);
        assert_eq!(texts("left[T <- 1]"), ["left", "[", "T", "<-", "1", "]"]);
        assert_eq!(texts("P:Puzzle ."), ["P:Puzzle", "."]);
    }

    #[test]
    fn comments_are_stripped() {
        assert_eq!(texts("a *** hidden\nb"), ["a", "b"]);
        assert_eq!(texts("a ***( multi\nline ) b --- more"), ["a", "b"]);
        let toks = tokenize("x\n  y");
        assert_eq!((toks[1].line, toks[1].col), (2, 3));
    }

    #[test]
    fn trailing_period() {
        assert_eq!(texts("endfm. s.t. x"), ["endfm", ".", "s.t.", "x"]);
    }
}
