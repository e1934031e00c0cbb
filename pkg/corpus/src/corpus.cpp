// Benchmark corpus functions over raw wire-protocol JSON documents.
//
// Behaviors mirror the committed golden vectors: direct leaks (no-ops whose
// leak lives in the native image description), field/array propagation,
// conditional propagation, no-leak controls, a counter-backed
// nondeterministic pair, and crash/hang entries.  Strings are ASCII on this
// corpus, so byte length equals character count.

#include "corpus.hpp"

#include <cinttypes>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <functional>
#include <map>
#include <thread>

#ifdef _WIN32
#error "POSIX only"
#endif
#include <unistd.h>

namespace corpus {

namespace {

int64_t g_counter = 41;  // process-local state for the nondeterministic entries

json v_str(const std::string& s) { return json{{"kind", "string"}, {"value", s}}; }

json v_i32(int64_t v) {
    const auto wrapped = static_cast<int32_t>(static_cast<uint32_t>(v));
    return json{{"kind", "int32"}, {"value", wrapped}};
}

json v_i64(int64_t v) { return json{{"kind", "int64"}, {"value", std::to_string(v)}}; }

json v_f64(double x) { return json{{"kind", "float64"}, {"value", float_to_hex(x)}}; }

json& field(json& rec, const char* name) { return rec["fields"][name]; }

bool is_null(const json& v) { return v.at("kind") == "null"; }

double num_of(const json& v) { return hex_to_float(v.at("value").get<std::string>()); }

// result carries the (possibly mutated) args and the optional return value
struct Result {
    json ret;  // null json (not value-null) when void
    json args;
};

using Fn = std::function<Result(json)>;

Result ret_void(json args) { return {json(), std::move(args)}; }

Result echo_first(json args) {
    json r = args.at(0);
    return {std::move(r), std::move(args)};
}

Result const_string(json args, const char* text) { return {v_str(text), std::move(args)}; }

const std::map<std::string, Fn>& table() {
    static const std::map<std::string, Fn> fns = {
        {"id_int32", echo_first},
        {"noop_data", ret_void},
        {"sum_pair", [](json args) {
             const int64_t a = args.at(0).at("value").get<int64_t>();
             const int64_t b = args.at(1).at("value").get<int64_t>();
             return Result{v_i32(a + b), std::move(args)};
         }},
        {"len_of", [](json args) {
             const auto& s = field(args.at(0), "s").at("value").get_ref<const std::string&>();
             return Result{v_i32(static_cast<int64_t>(s.size())), std::move(args)};
         }},
        {"abstract_area", [](json args) {
             const json& shape = args.at(0);
             double area = 0.0;
             if (!is_null(shape)) {
                 if (shape.at("type") == "Circle")
                     area = num_of(shape.at("fields").at("r")) * 2.0;
                 else
                     area = num_of(shape.at("fields").at("w")) * 3.0;
             }
             return Result{v_f64(area), std::move(args)};
         }},
        {"recv_store", [](json args) {
             if (!is_null(args.at(0))) field(args.at(0), "buf") = args.at(1);
             return ret_void(std::move(args));
         }},
        {"zero_arg_counter", [](json args) {
             return Result{v_i64(++g_counter), std::move(args)};
         }},
        {"prim_void_pair", ret_void},
        {"nondet_counter", [](json args) {
             return Result{v_i64(++g_counter), std::move(args)};
         }},
        {"crash_now", [](json args) -> Result {
             std::fflush(stdout);
             _exit(13);
         }},
        {"hang_forever", [](json args) -> Result {
             for (;;) std::this_thread::sleep_for(std::chrono::seconds(1));
         }},
        {"Java_com_ex_fig1_MainActivity_propagateData", [](json args) {
             const bool choice = args.at(2).at("value").get<bool>();
             if (!choice && !is_null(args.at(0)) && !is_null(args.at(1)))
                 field(args.at(1), "s") = field(args.at(0), "s");
             return ret_void(std::move(args));
         }},
        {"Java_com_ex_source_Main_getSecret",
         [](json args) { return const_string(std::move(args), "secret-knowledge"); }},
        {"Java_com_ex_nosource_Main_fetch",
         [](json args) { return const_string(std::move(args), "plain-data"); }},
        {"Java_com_ex_srcclean_Main_cleanFetch",
         [](json args) { return const_string(std::move(args), "secret-knowledge"); }},
        {"Java_com_ex_leak_Main_send", ret_void},
        {"Java_com_ex_leakarr_Main_sendArray", ret_void},
        {"dynreg_send_impl", ret_void},
        {"dynreg_multi_send_impl", ret_void},
        {"dynreg_multi_fmt_impl", [](json args) {
             const int64_t x = args.at(0).at("value").get<int64_t>();
             return Result{v_i32(x + 1), std::move(args)};
         }},
        {"Java_com_ex_noleak_Main_process", [](json args) {
             if (!is_null(args.at(1))) field(args.at(1), "s") = v_str("benign");
             return ret_void(std::move(args));
         }},
        {"Java_com_ex_noleakarr_Main_pick", [](json args) {
             const json& elems = args.at(1).at("elems");
             json r = elems.empty() ? v_str("") : elems.back();
             return Result{std::move(r), std::move(args)};
         }},
        {"over_process_str_impl", echo_first},
        {"over_process_int_impl", echo_first},
        {"Java_com_ex_multi_Main_store", [](json args) {
             if (!is_null(args.at(0))) field(args.at(0), "v") = args.at(1);
             return ret_void(std::move(args));
         }},
        {"Java_com_ex_multi_Main_send", ret_void},
        {"Java_com_ex_mlib_Main_transform", [](json args) {
             json r = is_null(args.at(0)) ? v_str("") : field(args.at(0), "s");
             return Result{std::move(r), std::move(args)};
         }},
        {"Java_com_ex_mlib_Main_send", ret_void},
        {"Java_com_ex_complex_Main_leak", ret_void},
        {"Java_com_ex_complex_Main_check", ret_void},
        {"Java_com_ex_stringop_Main_mask",
         [](json args) { return const_string(std::move(args), "****"); }},
        {"Java_com_ex_heap_Main_refresh", [](json args) {
             if (!is_null(args.at(0))) field(args.at(0), "v") = v_str("fetched-native");
             return ret_void(std::move(args));
         }},
        {"Java_com_ex_setnative_Main_fill", [](json args) {
             if (!is_null(args.at(0))) {
                 field(args.at(0), "a") = v_str("native-a");
                 field(args.at(0), "b") = v_str("native-b");
             }
             return ret_void(std::move(args));
         }},
        {"Java_com_ex_setarg_Main_set", [](json args) {
             if (!is_null(args.at(0))) field(args.at(0), "v") = args.at(1);
             return ret_void(std::move(args));
         }},
        {"Java_com_ex_setargfield_Main_copy", [](json args) {
             if (!is_null(args.at(0)) && !is_null(args.at(1)))
                 field(args.at(0), "v") = field(args.at(1), "s");
             return ret_void(std::move(args));
         }},
        {"Java_com_ex_iccj2n_Main_deliver", ret_void},
        {"Java_com_ex_iccn2j_Main_fetch",
         [](json args) { return const_string(std::move(args), "secret-knowledge"); }},
        {"fold_sink_impl", ret_void},
        {"fold_helper_impl", ret_void},
        {"fwd_src_impl",
         [](json args) { return const_string(std::move(args), "secret-knowledge"); }},
        {"fwd_pull_impl",
         [](json args) { return const_string(std::move(args), "plain-data"); }},
    };
    return fns;
}

json fault(const std::string& message) {
    return json{{"status", "fault"}, {"log", message}};
}

}  // namespace

std::string float_to_hex(double x) {
    uint64_t bits;
    static_assert(sizeof(bits) == sizeof(x), "ieee754 double expected");
    std::memcpy(&bits, &x, sizeof(bits));
    const bool negative = bits >> 63;
    const unsigned exp = (bits >> 52) & 0x7FF;
    const uint64_t frac = bits & 0xFFFFFFFFFFFFFULL;
    char buf[40];
    if (exp == 0x7FF) {
        if (frac) return "nan";
        return negative ? "-inf" : "inf";
    }
    if (exp == 0 && frac == 0) return negative ? "-0x0.0p+0" : "0x0.0p+0";
    if (exp == 0) {  // subnormal: 0x0.<frac>p-1022
        std::snprintf(buf, sizeof(buf), "%s0x0.%013" PRIx64 "p-1022", negative ? "-" : "", frac);
        return buf;
    }
    std::snprintf(buf, sizeof(buf), "%s0x1.%013" PRIx64 "p%+d", negative ? "-" : "", frac,
                  static_cast<int>(exp) - 1023);
    return buf;
}

double hex_to_float(const std::string& text) { return std::strtod(text.c_str(), nullptr); }

json dispatch(const json& request) {
    const std::string name = request.value("function", "");
    if (name == "__list__") {
        json names = json::array();
        for (const auto& [fname, _] : table()) names.push_back(v_str(fname));
        return json{{"status", "ok"},
                    {"ret", json{{"kind", "array"},
                                 {"elem_type", json{{"kind", "string"}}},
                                 {"elems", std::move(names)}}},
                    {"args_post", json::array()},
                    {"log", ""}};
    }
    const auto it = table().find(name);
    if (it == table().end()) return fault("unknown function '" + name + "'");
    try {
        Result r = it->second(request.value("args", json::array()));
        json response{{"status", "ok"}, {"args_post", std::move(r.args)}, {"log", ""}};
        if (!r.ret.is_null()) response["ret"] = std::move(r.ret);
        return response;
    } catch (const std::exception& e) {
        return fault(e.what());
    }
}

std::string encode_frame(const json& doc) {
    // Fault logs can quote raw request bytes; replace invalid UTF-8 rather
    // than throwing mid-response.
    const std::string body = doc.dump(-1, ' ', false, json::error_handler_t::replace);
    const uint32_t n = static_cast<uint32_t>(body.size());
    std::string frame(4, '\0');
    frame[0] = static_cast<char>(n & 0xFF);
    frame[1] = static_cast<char>((n >> 8) & 0xFF);
    frame[2] = static_cast<char>((n >> 16) & 0xFF);
    frame[3] = static_cast<char>((n >> 24) & 0xFF);
    return frame + body;
}

}  // namespace corpus
