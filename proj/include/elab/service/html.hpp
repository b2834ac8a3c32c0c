#pragma once

#include <string>
#include <string_view>

namespace elab::service {

/// Keeps allow-listed tags (p, br, b, i, em, strong, u, sub, sup, code, pre,
/// blockquote, ul, ol, li, h1-h4, span, a) and escapes everything else.
/// Attributes are dropped except an `href` on `a` whose scheme is http,
/// https or mailto, or which is relative. Well-formed allowed markup comes
/// back unchanged.
std::string sanitize_html(std::string_view html);

std::string escape_html(std::string_view text);

} // namespace elab::service
