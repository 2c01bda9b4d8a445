//! A tolerant tag stripper. It is not an HTML parser: it removes comments,
//! `script`/`style` bodies and tags, decodes the common entities, and
//! collects anchor `href`s.

use url::Url;

/// Plain text of an HTML fragment with whitespace collapsed.
pub fn extract_text(html: &str) -> String {
    scan(html).0
}

/// Plain text plus the absolute http(s) links of every anchor, resolved
/// against `base`, without fragments, first occurrence kept.
pub fn extract_text_and_links(html: &str, base: &Url) -> (String, Vec<Url>) {
    let (text, hrefs) = scan(html);
    let mut links: Vec<Url> = Vec::new();
    for href in hrefs {
        let Some(url) = resolve_link(&href, base) else {
            continue;
        };
        if !links.contains(&url) {
            links.push(url);
        }
    }
    (text, links)
}

fn resolve_link(href: &str, base: &Url) -> Option<Url> {
    let href = href.trim();
    if href.is_empty() {
        return None;
    }
    let mut url = base.join(href).ok()?;
    if !matches!(url.scheme(), "http" | "https") {
        return None;
    }
    url.set_fragment(None);
    Some(url)
}

fn scan(html: &str) -> (String, Vec<String>) {
    let lower = html.to_ascii_lowercase();
    let bytes = html.as_bytes();
    let mut raw_text = String::with_capacity(html.len());
    let mut hrefs = Vec::new();
    let mut pos = 0;
    let mut text_start = 0;

    while pos < bytes.len() {
        if bytes[pos] != b'<' {
            pos += 1;
            continue;
        }
        let next = bytes.get(pos + 1).copied();
        let is_markup = matches!(next, Some(c) if c.is_ascii_alphabetic() || c == b'/' || c == b'!' || c == b'?');
        if !is_markup {
            pos += 1;
            continue;
        }
        raw_text.push_str(&html[text_start..pos]);
        raw_text.push(' ');

        if lower[pos..].starts_with("<!--") {
            pos = lower[pos + 4..]
                .find("-->")
                .map_or(bytes.len(), |i| pos + 4 + i + 3);
            text_start = pos;
            continue;
        }

        let end = tag_end(bytes, pos);
        let inner = &html[pos + 1..end.min(bytes.len())];
        pos = (end + 1).min(bytes.len());
        text_start = pos;

        let name_len = inner
            .find(|c: char| c.is_ascii_whitespace() || c == '/' || c == '>')
            .unwrap_or(inner.len());
        let name = inner[..name_len].to_ascii_lowercase();
        match name.as_str() {
            "script" | "style" if !inner.trim_end().ends_with('/') => {
                let close = format!("</{name}");
                pos = match lower[pos..].find(&close) {
                    Some(i) => {
                        let close_at = pos + i;
                        (tag_end(bytes, close_at) + 1).min(bytes.len())
                    }
                    None => bytes.len(),
                };
                text_start = pos;
            }
            "a" => {
                if let Some(href) = attribute(&inner[name_len..], "href") {
                    hrefs.push(decode_entities(&href));
                }
            }
            _ => {}
        }
    }
    raw_text.push_str(&html[text_start.min(bytes.len())..]);

    let decoded = decode_entities(&raw_text);
    let text = decoded.split_whitespace().collect::<Vec<_>>().join(" ");
    (text, hrefs)
}

/// Index of the `>` closing the tag opened at `start`, honoring quotes.
fn tag_end(bytes: &[u8], start: usize) -> usize {
    let mut quote: Option<u8> = None;
    let mut i = start + 1;
    while i < bytes.len() {
        let b = bytes[i];
        match quote {
            Some(q) if b == q => quote = None,
            Some(_) => {}
            None if b == b'"' || b == b'\'' => quote = Some(b),
            None if b == b'>' => return i,
            None => {}
        }
        i += 1;
    }
    bytes.len()
}

fn attribute(attrs: &str, wanted: &str) -> Option<String> {
    let mut rest = attrs;
    loop {
        rest = rest.trim_start_matches(|c: char| c.is_ascii_whitespace() || c == '/');
        if rest.is_empty() {
            return None;
        }
        let name_len = rest
            .find(|c: char| c.is_ascii_whitespace() || c == '=' || c == '/')
            .unwrap_or(rest.len());
        let name = &rest[..name_len];
        rest = rest[name_len..].trim_start();
        let value = if let Some(after_eq) = rest.strip_prefix('=') {
            let after_eq = after_eq.trim_start();
            match after_eq.chars().next() {
                Some(q @ ('"' | '\'')) => {
                    let body = &after_eq[1..];
                    let close = body.find(q).unwrap_or(body.len());
                    rest = body.get(close + 1..).unwrap_or("");
                    &body[..close]
                }
                _ => {
                    let len = after_eq
                        .find(|c: char| c.is_ascii_whitespace())
                        .unwrap_or(after_eq.len());
                    rest = &after_eq[len..];
                    &after_eq[..len]
                }
            }
        } else {
            ""
        };
        if name.eq_ignore_ascii_case(wanted) {
            return Some(value.to_owned());
        }
    }
}

fn decode_entities(s: &str) -> String {
    if !s.contains('&') {
        return s.to_owned();
    }
    let mut out = String::with_capacity(s.len());
    let mut rest = s;
    while let Some(amp) = rest.find('&') {
        out.push_str(&rest[..amp]);
        rest = &rest[amp..];
        let decoded = rest[1..]
            .find(';')
            .filter(|&semi| semi <= 10)
            .and_then(|semi| decode_entity(&rest[1..1 + semi]).map(|c| (c, semi + 2)));
        match decoded {
            Some((c, consumed)) => {
                out.push(c);
                rest = &rest[consumed..];
            }
            None => {
                out.push('&');
                rest = &rest[1..];
            }
        }
    }
    out.push_str(rest);
    out
}

fn decode_entity(name: &str) -> Option<char> {
    match name {
        "amp" => Some('&'),
        "lt" => Some('<'),
        "gt" => Some('>'),
        "quot" => Some('"'),
        "apos" => Some('\''),
        "nbsp" => Some(' '),
        _ => {
            let num = name.strip_prefix('#')?;
            let code = match num.strip_prefix(['x', 'X']) {
                Some(hex) => u32::from_str_radix(hex, 16).ok()?,
                None => num.parse().ok()?,
            };
            char::from_u32(code)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base(s: &str) -> Url {
        Url::parse(s).unwrap()
    }

    #[test]
    fn paragraph_and_anchor() {
        let (text, links) =
            extract_text_and_links(r#"<p>lump</p><a href="/b.html">x</a>"#, &base("http://h/a.html"));
        assert_eq!(text, "lump x");
        assert_eq!(links, [base("http://h/b.html")]);
    }

    #[test]
    fn no_anchors() {
        let (text, links) = extract_text_and_links("<h1>Oncology</h1>\n\n<p>genes</p>", &base("http://h/"));
        assert_eq!(text, "Oncology genes");
        assert!(links.is_empty());
    }

    #[test]
    fn relative_link_and_fragment() {
        let (_, links) = extract_text_and_links(r#"<a href="c.html#top">c</a>"#, &base("http://h/d/a.html"));
        assert_eq!(links, [base("http://h/d/c.html")]);
    }

    #[test]
    fn scripts_styles_and_comments_removed() {
        let html = "<html><head><style>p { color: red }</style><SCRIPT type='x'>var a = '<p>';</SCRIPT></head>\
                    <body><!-- hidden <a href='z.html'> -->visible&amp;kept &lt;tag&gt;</body></html>";
        let (text, links) = extract_text_and_links(html, &base("http://h/"));
        assert_eq!(text, "visible&kept <tag>");
        assert!(links.is_empty());
    }

    #[test]
    fn schemes_filtered_and_duplicates_dropped() {
        let html = r#"<a href="mailto:x@h">m</a><a href='javascript:void(0)'>j</a>
            <a href=b.html>1</a><a class="k" HREF="b.html#frag">2</a><a href="https://o/x">3</a><a>none</a>"#;
        let (_, links) = extract_text_and_links(html, &base("http://h/a/"));
        assert_eq!(links, [base("http://h/a/b.html"), base("https://o/x")]);
    }

    #[test]
    fn malformed_markup_is_tolerated() {
        let (text, links) = extract_text_and_links("a < b and <a href=\"x.html\"unterminated", &base("http://h/"));
        assert_eq!(text, "a < b and");
        assert_eq!(links, [base("http://h/x.html")]);
        assert_eq!(extract_text("<script>never closed"), "");
        assert_eq!(extract_text("5 &bogus; &#65;&#x42;"), "5 &bogus; AB");
    }
}
