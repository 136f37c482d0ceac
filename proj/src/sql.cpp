#include "sieve/sql.hpp"

#include <algorithm>
#include <cctype>

namespace sieve {

BoolExpr BoolExpr::make_and(std::vector<BoolExpr> cs) {
    if (cs.size() == 1) return std::move(cs[0]);
    BoolExpr e;
    e.kind = And;
    e.children = std::move(cs);
    return e;
}

BoolExpr BoolExpr::make_or(std::vector<BoolExpr> cs) {
    if (cs.size() == 1) return std::move(cs[0]);
    BoolExpr e;
    e.kind = Or;
    e.children = std::move(cs);
    return e;
}

BoolExpr BoolExpr::make_pred(SqlPred p) {
    BoolExpr e;
    e.kind = Pred;
    e.pred = std::move(p);
    return e;
}

namespace {

enum class Tok : uint8_t { End, Ident, Number, String, Punct };

struct Token {
    Tok kind = Tok::End;
    std::string text;
    size_t pos = 0;
};

bool ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
bool ident_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-';
}

class Lexer {
public:
    explicit Lexer(const std::string &text) : text_(text) { advance(); }

    const Token &cur() const { return cur_; }
    const std::string &source() const { return text_; }
    size_t cursor() const { return pos_; }
    void set_cursor(size_t p) {
        pos_ = p;
        advance();
    }

    // first comment, if any, for query metadata
    std::optional<std::string> leading_comment() const { return leading_comment_; }

    void advance() {
        skip_space();
        cur_ = Token{};
        cur_.pos = pos_;
        if (pos_ >= text_.size()) return;
        char c = text_[pos_];
        if (ident_start(c)) {
            size_t s = pos_;
            // '-' binds into identifiers (ts-time) when followed by a letter
            while (pos_ < text_.size() && ident_char(text_[pos_])) {
                if (text_[pos_] == '-' &&
                    (pos_ + 1 >= text_.size() ||
                     !(std::isalpha(static_cast<unsigned char>(text_[pos_ + 1])) ||
                       text_[pos_ + 1] == '_')))
                    break;
                ++pos_;
            }
            cur_.kind = Tok::Ident;
            cur_.text = text_.substr(s, pos_ - s);
            return;
        }
        if (std::isdigit(static_cast<unsigned char>(c))) {
            size_t s = pos_;
            while (pos_ < text_.size() &&
                   (std::isdigit(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '.'))
                ++pos_;
            cur_.kind = Tok::Number;
            cur_.text = text_.substr(s, pos_ - s);
            return;
        }
        if (c == '\'') {
            ++pos_;
            std::string out;
            while (pos_ < text_.size()) {
                if (text_[pos_] == '\'') {
                    if (pos_ + 1 < text_.size() && text_[pos_ + 1] == '\'') {
                        out += '\'';
                        pos_ += 2;
                        continue;
                    }
                    ++pos_;
                    cur_.kind = Tok::String;
                    cur_.text = std::move(out);
                    return;
                }
                out += text_[pos_++];
            }
            throw ParseError("unterminated string literal", cur_.pos);
        }
        // multi-char operators
        for (const char *op : {"!=", "<>", "<=", ">="}) {
            if (text_.compare(pos_, 2, op) == 0) {
                cur_.kind = Tok::Punct;
                cur_.text = op;
                pos_ += 2;
                return;
            }
        }
        cur_.kind = Tok::Punct;
        cur_.text = std::string(1, c);
        ++pos_;
    }

private:
    void skip_space() {
        while (pos_ < text_.size()) {
            char c = text_[pos_];
            if (std::isspace(static_cast<unsigned char>(c))) {
                ++pos_;
            } else if (c == '/' && pos_ + 1 < text_.size() && text_[pos_ + 1] == '*') {
                size_t end = text_.find("*/", pos_ + 2);
                if (end == std::string::npos) throw ParseError("unterminated comment", pos_);
                std::string body = text_.substr(pos_ + 2, end - pos_ - 2);
                if (!leading_comment_) leading_comment_ = body;
                pos_ = end + 2;
            } else if (c == '-' && pos_ + 1 < text_.size() && text_[pos_ + 1] == '-') {
                size_t end = text_.find('\n', pos_);
                pos_ = end == std::string::npos ? text_.size() : end + 1;
            } else {
                break;
            }
        }
    }

    const std::string &text_;
    size_t pos_ = 0;
    Token cur_;
    std::optional<std::string> leading_comment_;
};

std::string upper(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(),
                   [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
    return s;
}

// quoted literals shaped like dates or times get their temporal kind
AttrValue typed_literal(const std::string &text) {
    if (text.size() == 10 && text[4] == '-' && text[7] == '-') {
        try {
            return AttrValue::parse_date(text);
        } catch (const Error &) {
        }
    }
    if ((text.size() == 5 || text.size() == 8) && text[2] == ':') {
        try {
            return AttrValue::parse_time(text);
        } catch (const Error &) {
        }
    }
    return AttrValue::str(text);
}

class Parser {
public:
    explicit Parser(const std::string &text) : lex_(text) {}

    SqlQuery parse() {
        SqlQuery q;
        if (is_kw("WITH")) {
            next();
            SqlQuery::WithClause wc;
            wc.alias = expect_ident("WITH alias");
            expect_kw("AS");
            expect_punct("(");
            wc.branches.push_back(parse_select());
            while (is_kw("UNION")) {
                next();
                wc.branches.push_back(parse_select());
            }
            expect_punct(")");
            q.with = std::move(wc);
        }
        q.main = parse_select();
        if (lex_.cur().kind != Tok::End)
            throw ParseError("unexpected trailing input '" + lex_.cur().text + "'",
                             lex_.cur().pos);
        if (auto c = lex_.leading_comment()) q.metadata = parse_metadata(*c);
        return q;
    }

private:
    static std::optional<std::pair<std::string, std::string>>
    parse_metadata(const std::string &body) {
        std::string querier, purpose;
        size_t p = 0;
        while (p < body.size()) {
            size_t semi = body.find(';', p);
            std::string part = body.substr(p, semi == std::string::npos ? semi : semi - p);
            size_t eq = part.find('=');
            if (eq != std::string::npos) {
                auto trim = [](std::string s) {
                    size_t a = s.find_first_not_of(" \t\n");
                    size_t b = s.find_last_not_of(" \t\n");
                    return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
                };
                std::string key = trim(part.substr(0, eq));
                std::string val = trim(part.substr(eq + 1));
                if (key == "querier") querier = val;
                if (key == "purpose") purpose = val;
            }
            if (semi == std::string::npos) break;
            p = semi + 1;
        }
        if (querier.empty() && purpose.empty()) return std::nullopt;
        return std::make_pair(querier, purpose);
    }

    bool is_kw(const char *kw) const {
        return lex_.cur().kind == Tok::Ident && upper(lex_.cur().text) == kw;
    }
    bool is_punct(const char *p) const {
        return lex_.cur().kind == Tok::Punct && lex_.cur().text == p;
    }
    void next() { lex_.advance(); }
    void expect_kw(const char *kw) {
        if (!is_kw(kw)) throw ParseError(std::string("expected ") + kw, lex_.cur().pos);
        next();
    }
    void expect_punct(const char *p) {
        if (!is_punct(p)) throw ParseError(std::string("expected '") + p + "'", lex_.cur().pos);
        next();
    }
    std::string expect_ident(const char *what) {
        if (lex_.cur().kind != Tok::Ident)
            throw ParseError(std::string("expected ") + what, lex_.cur().pos);
        std::string s = lex_.cur().text;
        next();
        return s;
    }

    static bool reserved(const std::string &up) {
        static const char *kws[] = {"SELECT", "FROM",  "WHERE", "JOIN",  "ON",    "AS",
                                    "AND",    "OR",    "IN",    "BETWEEN", "GROUP", "BY",
                                    "UNION",  "FORCE", "USE",   "INDEX", "WITH",  "COUNT",
                                    "DISTINCT", "TRUE", "FALSE", "NOT"};
        for (const char *k : kws)
            if (up == k) return true;
        return false;
    }

    std::pair<std::string, std::string> parse_qualified(const char *what) {
        std::string a = expect_ident(what);
        if (is_punct(".")) {
            next();
            std::string b = expect_ident("attribute after '.'");
            return {a, b};
        }
        return {"", a};
    }

    SelectStmt parse_select() {
        SelectStmt st;
        expect_kw("SELECT");
        while (true) {
            SelectItem item;
            if (is_punct("*")) {
                next();
                item.kind = SelectItem::Star;
            } else if (is_kw("COUNT")) {
                next();
                expect_punct("(");
                if (is_punct("*")) {
                    next();
                    item.kind = SelectItem::CountStar;
                } else {
                    expect_kw("DISTINCT");
                    auto [q, n] = parse_qualified("COUNT DISTINCT attribute");
                    item.kind = SelectItem::CountDistinct;
                    item.qualifier = q;
                    item.name = n;
                }
                expect_punct(")");
            } else {
                auto [q, n] = parse_qualified("select column");
                item.kind = SelectItem::Column;
                item.qualifier = q;
                item.name = n;
            }
            st.items.push_back(std::move(item));
            if (!is_punct(",")) break;
            next();
        }
        expect_kw("FROM");
        st.from = parse_table_ref();
        if (is_kw("JOIN")) {
            next();
            JoinClause jc;
            jc.table = parse_table_ref();
            expect_kw("ON");
            std::tie(jc.left_qualifier, jc.left_attr) = parse_qualified("join attribute");
            expect_punct("=");
            std::tie(jc.right_qualifier, jc.right_attr) = parse_qualified("join attribute");
            st.join = std::move(jc);
        }
        if (is_kw("WHERE")) {
            next();
            st.where = parse_or();
        }
        if (is_kw("GROUP")) {
            next();
            expect_kw("BY");
            while (true) {
                st.group_by.push_back(parse_qualified("group-by attribute"));
                if (!is_punct(",")) break;
                next();
            }
        }
        return st;
    }

    TableRef parse_table_ref() {
        TableRef tr;
        tr.name = expect_ident("relation name");
        if (is_kw("AS")) {
            next();
            tr.alias = expect_ident("alias");
        } else if (lex_.cur().kind == Tok::Ident && !reserved(upper(lex_.cur().text))) {
            tr.alias = expect_ident("alias");
        } else {
            tr.alias = tr.name;
        }
        if (is_kw("FORCE")) {
            next();
            expect_kw("INDEX");
            expect_punct("(");
            tr.hint = TableRef::ForceIndex;
            tr.hint_index = expect_ident("index name");
            expect_punct(")");
        } else if (is_kw("USE")) {
            next();
            expect_kw("INDEX");
            expect_punct("(");
            expect_punct(")");
            tr.hint = TableRef::IgnoreIndexes;
        }
        return tr;
    }

    BoolExpr parse_or() {
        std::vector<BoolExpr> cs;
        cs.push_back(parse_and());
        while (is_kw("OR")) {
            next();
            cs.push_back(parse_and());
        }
        return BoolExpr::make_or(std::move(cs));
    }

    BoolExpr parse_and() {
        std::vector<BoolExpr> cs;
        cs.push_back(parse_atom());
        while (is_kw("AND")) {
            next();
            cs.push_back(parse_atom());
        }
        return BoolExpr::make_and(std::move(cs));
    }

    BoolExpr parse_atom() {
        if (is_punct("(")) {
            next();
            BoolExpr e = parse_or();
            expect_punct(")");
            return e;
        }
        if (is_kw("TRUE")) {
            next();
            BoolExpr e;
            e.kind = BoolExpr::True;
            return e;
        }
        if (is_kw("FALSE")) {
            next();
            BoolExpr e;
            e.kind = BoolExpr::False;
            return e;
        }
        if (is_kw("NOT"))
            throw ParseError("unsupported construct NOT", lex_.cur().pos);
        if (is_kw("SIEVE_DELTA")) return parse_delta();
        return parse_predicate();
    }

    BoolExpr parse_delta() {
        size_t pos = lex_.cur().pos;
        next();
        expect_punct("(");
        DeltaCall dc;
        if (lex_.cur().kind != Tok::Number) throw ParseError("expected guard id", pos);
        dc.guard_id = std::stoll(lex_.cur().text);
        next();
        expect_punct(",");
        if (lex_.cur().kind != Tok::String) throw ParseError("expected querier string", pos);
        dc.querier = lex_.cur().text;
        next();
        expect_punct(",");
        if (lex_.cur().kind != Tok::String) throw ParseError("expected purpose string", pos);
        dc.purpose = lex_.cur().text;
        next();
        while (is_punct(",")) {
            next();
            dc.attrs.push_back(expect_ident("attribute name"));
        }
        expect_punct(")");
        if (is_punct("=")) {
            next();
            expect_kw("TRUE");
        }
        BoolExpr e;
        e.kind = BoolExpr::Delta;
        e.delta = std::move(dc);
        return e;
    }

    AttrValue parse_literal() {
        const size_t pos = lex_.cur().pos;
        bool neg = false;
        if (is_punct("-")) {
            next();
            neg = true;
        }
        if (lex_.cur().kind == Tok::Number) {
            std::string t = lex_.cur().text;
            next();
            if (t.find('.') != std::string::npos) {
                double d = std::stod(t);
                return AttrValue::decimal(neg ? -d : d);
            }
            int64_t v = std::stoll(t);
            return AttrValue::integer(neg ? -v : v);
        }
        if (neg) throw ParseError("expected number after '-'", pos);
        if (lex_.cur().kind == Tok::String) {
            AttrValue v = typed_literal(lex_.cur().text);
            next();
            return v;
        }
        throw ParseError("expected literal", pos);
    }

    // value position: literal, outer.attr binding, or a derived sub-select
    struct ValueTerm {
        std::optional<AttrValue> literal;
        std::string outer_attr;
        std::string subquery;
    };

    ValueTerm parse_value() {
        ValueTerm v;
        if (lex_.cur().kind == Tok::Ident && upper(lex_.cur().text) == "OUTER") {
            next();
            expect_punct(".");
            v.outer_attr = expect_ident("outer attribute");
            return v;
        }
        if (is_punct("(")) {
            // capture balanced sub-select text
            size_t start = lex_.cur().pos;
            next();
            if (!is_kw("SELECT"))
                throw ParseError("expected SELECT in sub-query", lex_.cur().pos);
            int depth = 1;
            const std::string &src = lex_.source();
            size_t p = lex_.cur().pos;
            while (p < src.size() && depth > 0) {
                if (src[p] == '(') ++depth;
                if (src[p] == ')') --depth;
                if (src[p] == '\'') {
                    ++p;
                    while (p < src.size() && src[p] != '\'') ++p;
                }
                ++p;
            }
            if (depth != 0) throw ParseError("unbalanced sub-query", start);
            v.subquery = src.substr(start + 1, p - start - 2);
            lex_.set_cursor(p);
            return v;
        }
        v.literal = parse_literal();
        return v;
    }

    BoolExpr parse_predicate() {
        auto [qual, attr] = parse_qualified("attribute");
        SqlPred pred;
        pred.qualifier = qual;

        if (is_kw("BETWEEN")) {
            next();
            AttrValue lo = parse_literal();
            expect_kw("AND");
            AttrValue hi = parse_literal();
            pred.cond = ObjectCondition::between(attr, lo, true, hi, true);
            return BoolExpr::make_pred(std::move(pred));
        }
        if (is_kw("IN")) {
            next();
            expect_punct("(");
            std::vector<AttrValue> vals;
            vals.push_back(parse_literal());
            while (is_punct(",")) {
                next();
                vals.push_back(parse_literal());
            }
            expect_punct(")");
            pred.cond = ObjectCondition::in_list(attr, std::move(vals));
            return BoolExpr::make_pred(std::move(pred));
        }
        if (lex_.cur().kind != Tok::Punct) throw ParseError("expected operator", lex_.cur().pos);
        auto op = op_from_name(lex_.cur().text);
        if (!op) throw ParseError("unsupported operator '" + lex_.cur().text + "'",
                                  lex_.cur().pos);
        next();
        ValueTerm v = parse_value();
        if (!v.subquery.empty()) {
            pred.cond = ObjectCondition::derived_cmp(attr, *op, v.subquery);
        } else if (!v.outer_attr.empty()) {
            pred.cond.attr = attr;
            pred.cond.op = *op;
            pred.outer_attr = v.outer_attr;
        } else {
            pred.cond.attr = attr;
            pred.cond.op = *op;
            pred.cond.values = {*v.literal};
        }
        return BoolExpr::make_pred(std::move(pred));
    }

    Lexer lex_;
};

} // namespace

SqlQuery parse_sql(const std::string &text) { return Parser(text).parse(); }

namespace {

void collect_conjuncts(const BoolExpr &e, std::vector<const SqlPred *> &out, const char *ctx) {
    switch (e.kind) {
    case BoolExpr::And:
        for (const auto &c : e.children) collect_conjuncts(c, out, ctx);
        return;
    case BoolExpr::Pred:
        out.push_back(&e.pred);
        return;
    case BoolExpr::True:
        return;
    case BoolExpr::Or:
        throw ParseError(std::string("unsupported construct OR in ") + ctx, 0);
    case BoolExpr::Delta:
        throw ParseError(std::string("unsupported construct delta call in ") + ctx, 0);
    case BoolExpr::False:
        throw ParseError(std::string("unsupported construct FALSE in ") + ctx, 0);
    }
}

} // namespace

QuerySpec parse_query(const std::string &text) {
    SqlQuery sq = parse_sql(text);
    if (sq.with) throw ParseError("unsupported construct WITH in plain query", 0);
    const SelectStmt &st = sq.main;
    if (st.from.hint != TableRef::NoHint)
        throw ParseError("unsupported construct index hint in plain query", 0);

    QuerySpec q;
    q.relation = st.from.name;
    if (sq.metadata) {
        q.metadata.querier = sq.metadata->first;
        q.metadata.purpose = sq.metadata->second;
    }

    q.select_star = false;
    for (const auto &item : st.items) {
        switch (item.kind) {
        case SelectItem::Star:
            q.select_star = true;
            break;
        case SelectItem::Column:
            q.select_cols.push_back(item.name);
            break;
        case SelectItem::CountStar:
            q.agg.kind = Aggregation::CountStar;
            break;
        case SelectItem::CountDistinct:
            q.agg.kind = Aggregation::CountDistinct;
            q.agg.attr = item.name;
            break;
        }
    }
    for (const auto &[qual, attr] : st.group_by) {
        (void)qual;
        q.agg.group_by.push_back(attr);
    }

    if (st.join) {
        JoinSpec js;
        js.relation = st.join->table.name;
        // orient the equi-join: left side lives on the FROM relation
        auto on_from = [&](const std::string &qual) {
            return qual.empty() || qual == st.from.alias || qual == st.from.name;
        };
        if (on_from(st.join->left_qualifier)) {
            js.left_attr = st.join->left_attr;
            js.right_attr = st.join->right_attr;
        } else {
            js.left_attr = st.join->right_attr;
            js.right_attr = st.join->left_attr;
        }
        q.join = std::move(js);
    }

    if (st.where) {
        std::vector<const SqlPred *> preds;
        collect_conjuncts(*st.where, preds, "plain query");
        for (const SqlPred *p : preds) {
            if (!p->outer_attr.empty())
                throw ParseError("unsupported construct outer reference in plain query", 0);
            bool on_join = st.join && !p->qualifier.empty() &&
                           (p->qualifier == st.join->table.alias ||
                            p->qualifier == st.join->table.name);
            if (!on_join && !p->qualifier.empty() && p->qualifier != st.from.alias &&
                p->qualifier != st.from.name)
                throw ParseError("unknown table qualifier '" + p->qualifier + "'", 0);
            if (on_join)
                q.join->predicates.push_back(p->cond);
            else
                q.where.push_back(p->cond);
        }
    }
    return q;
}

std::string sql_literal(const AttrValue &v) {
    switch (v.kind) {
    case ValueKind::Int:
    case ValueKind::Decimal:
        return v.to_string();
    case ValueKind::Date:
    case ValueKind::Time:
        return "'" + v.to_string() + "'";
    case ValueKind::String: {
        std::string out = "'";
        for (char c : v.s) {
            if (c == '\'') out += "''";
            out += c;
        }
        out += "'";
        return out;
    }
    }
    return v.to_string();
}

std::string emit_condition(const ObjectCondition &oc, const std::string &qualifier) {
    std::string a = qualifier.empty() ? oc.attr : qualifier + "." + oc.attr;
    if (oc.derived()) return a + " " + op_name(oc.op) + " (" + oc.subquery + ")";
    switch (oc.op) {
    case CompareOp::Between: {
        if (oc.low_closed && oc.high_closed)
            return a + " BETWEEN " + sql_literal(oc.values[0]) + " AND " +
                   sql_literal(oc.values[1]);
        std::string lo = a + (oc.low_closed ? " >= " : " > ") + sql_literal(oc.values[0]);
        std::string hi = a + (oc.high_closed ? " <= " : " < ") + sql_literal(oc.values[1]);
        return lo + " AND " + hi;
    }
    case CompareOp::In: {
        std::string out = a + " IN (";
        for (size_t k = 0; k < oc.values.size(); ++k)
            out += (k ? ", " : "") + sql_literal(oc.values[k]);
        return out + ")";
    }
    default:
        return a + " " + op_name(oc.op) + " " + sql_literal(oc.values[0]);
    }
}

namespace {

std::string emit_bool(const BoolExpr &e, const std::string &qualifier) {
    switch (e.kind) {
    case BoolExpr::True:
        return "TRUE";
    case BoolExpr::False:
        return "FALSE";
    case BoolExpr::Pred: {
        const auto &p = e.pred;
        std::string qual = p.qualifier.empty() ? qualifier : p.qualifier;
        if (!p.outer_attr.empty()) {
            std::string a = qual.empty() ? p.cond.attr : qual + "." + p.cond.attr;
            return a + " " + op_name(p.cond.op) + " outer." + p.outer_attr;
        }
        return emit_condition(p.cond, qual);
    }
    case BoolExpr::Delta: {
        std::string out = "sieve_delta(" + std::to_string(e.delta.guard_id) + ", '" +
                          e.delta.querier + "', '" + e.delta.purpose + "'";
        for (const auto &a : e.delta.attrs) out += ", " + a;
        return out + ") = TRUE";
    }
    case BoolExpr::And: {
        std::string out;
        for (size_t k = 0; k < e.children.size(); ++k) {
            if (k) out += " AND ";
            bool paren = e.children[k].kind == BoolExpr::Or;
            out += paren ? "(" + emit_bool(e.children[k], qualifier) + ")"
                         : emit_bool(e.children[k], qualifier);
        }
        return out;
    }
    case BoolExpr::Or: {
        std::string out;
        for (size_t k = 0; k < e.children.size(); ++k) {
            if (k) out += " OR ";
            out += "(" + emit_bool(e.children[k], qualifier) + ")";
        }
        return out;
    }
    }
    return "";
}

std::string emit_table_ref(const TableRef &tr) {
    std::string out = tr.name;
    if (tr.alias != tr.name) out += " AS " + tr.alias;
    if (tr.hint == TableRef::ForceIndex) out += " FORCE INDEX (" + tr.hint_index + ")";
    if (tr.hint == TableRef::IgnoreIndexes) out += " USE INDEX ()";
    return out;
}

std::string emit_select(const SelectStmt &st) {
    std::string out = "SELECT ";
    for (size_t k = 0; k < st.items.size(); ++k) {
        const auto &item = st.items[k];
        if (k) out += ", ";
        switch (item.kind) {
        case SelectItem::Star:
            out += "*";
            break;
        case SelectItem::Column:
            out += item.qualifier.empty() ? item.name : item.qualifier + "." + item.name;
            break;
        case SelectItem::CountStar:
            out += "COUNT(*)";
            break;
        case SelectItem::CountDistinct:
            out += "COUNT(DISTINCT " +
                   (item.qualifier.empty() ? item.name : item.qualifier + "." + item.name) + ")";
            break;
        }
    }
    out += " FROM " + emit_table_ref(st.from);
    if (st.join) {
        out += " JOIN " + emit_table_ref(st.join->table) + " ON ";
        out += st.join->left_qualifier.empty() ? st.join->left_attr
                                               : st.join->left_qualifier + "." + st.join->left_attr;
        out += " = ";
        out += st.join->right_qualifier.empty()
                   ? st.join->right_attr
                   : st.join->right_qualifier + "." + st.join->right_attr;
    }
    if (st.where) out += " WHERE " + emit_bool(*st.where, "");
    if (!st.group_by.empty()) {
        out += " GROUP BY ";
        for (size_t k = 0; k < st.group_by.size(); ++k) {
            if (k) out += ", ";
            out += st.group_by[k].first.empty()
                       ? st.group_by[k].second
                       : st.group_by[k].first + "." + st.group_by[k].second;
        }
    }
    return out;
}

} // namespace

std::string emit_sql_query(const SqlQuery &q) {
    std::string out;
    if (q.metadata)
        out += "/* querier=" + q.metadata->first + "; purpose=" + q.metadata->second + " */\n";
    if (q.with) {
        out += "WITH " + q.with->alias + " AS (\n";
        for (size_t k = 0; k < q.with->branches.size(); ++k) {
            if (k) out += "\nUNION\n";
            out += "  " + emit_select(q.with->branches[k]);
        }
        out += "\n)\n";
    }
    out += emit_select(q.main);
    return out;
}

std::string emit_queryspec(const QuerySpec &q, bool with_metadata_comment) {
    std::string out;
    if (with_metadata_comment && !q.metadata.querier.empty())
        out += "/* querier=" + q.metadata.querier + "; purpose=" + q.metadata.purpose + " */\n";
    out += "SELECT ";
    bool first = true;
    if (q.select_star) {
        out += "*";
        first = false;
    }
    for (const auto &c : q.select_cols) {
        if (!first) out += ", ";
        out += c;
        first = false;
    }
    if (q.agg.kind == Aggregation::CountStar) {
        if (!first) out += ", ";
        out += "COUNT(*)";
        first = false;
    } else if (q.agg.kind == Aggregation::CountDistinct) {
        if (!first) out += ", ";
        out += "COUNT(DISTINCT " + q.agg.attr + ")";
        first = false;
    }
    if (first) out += "*";
    out += " FROM " + q.relation;
    if (q.join) out += " JOIN " + q.join->relation + " ON " + q.relation + "." + q.join->left_attr +
                       " = " + q.join->relation + "." + q.join->right_attr;
    std::vector<std::string> conjuncts;
    for (const auto &oc : q.where) conjuncts.push_back(emit_condition(oc, q.relation));
    if (q.join)
        for (const auto &oc : q.join->predicates)
            conjuncts.push_back(emit_condition(oc, q.join->relation));
    if (!conjuncts.empty()) {
        out += " WHERE ";
        for (size_t k = 0; k < conjuncts.size(); ++k) out += (k ? " AND " : "") + conjuncts[k];
    }
    if (!q.agg.group_by.empty()) {
        out += " GROUP BY ";
        for (size_t k = 0; k < q.agg.group_by.size(); ++k)
            out += (k ? ", " : "") + q.agg.group_by[k];
    }
    return out;
}

} // namespace sieve
