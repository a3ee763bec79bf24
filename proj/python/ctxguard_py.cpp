// Python bindings. Structured results cross the boundary as JSON and come
// out as plain dicts and lists.
#include "ctxguard/corpus.hpp"
#include "ctxguard/errors.hpp"
#include "ctxguard/evalharness.hpp"
#include "ctxguard/gateway.hpp"
#include "ctxguard/mediator.hpp"
#include "ctxguard/renderer.hpp"
#include "ctxguard/static_analyzer.hpp"
#include "ctxguard/text.hpp"

#include <json.hpp>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <optional>

namespace py = pybind11;
using namespace ctxguard;

namespace {

py::object from_json(const std::string &s) {
  return py::module_::import("json").attr("loads")(s);
}

Corpus load_corpus(const std::optional<std::string> &dir, std::uint64_t seed,
                   std::size_t apps) {
  return dir ? read_corpus(*dir) : generate_corpus(seed, apps);
}

CvOptions cv_options(std::size_t k, std::uint64_t harness_seed, bool group,
                     const std::string &features) {
  CvOptions o;
  o.k = k;
  o.seed = harness_seed;
  o.group_by_app = group;
  o.enabled = EnabledSets::parse(features);
  return o;
}

FeatureSet feature_set(const std::string &s) {
  if (s == "who")
    return FeatureSet::Who;
  if (s == "when")
    return FeatureSet::When;
  if (s == "what")
    return FeatureSet::What;
  throw ValidationError("unknown feature set '" + s + "'");
}

std::string stats_json(const Mediator &m) {
  const MediatorStats s = m.stats();
  nlohmann::json perms = nlohmann::json::object();
  for (const auto &[p, ps] : s.permissions)
    perms[std::string(to_string(p))] = {{"examples_seen", ps.examples_seen},
                                        {"algo", std::string(to_string(ps.algo))},
                                        {"allow", ps.allow},
                                        {"deny", ps.deny},
                                        {"prompted", ps.prompted}};
  return nlohmann::json{{"permissions", perms},
                        {"tau_lo", s.thresholds.tau_lo},
                        {"tau_hi", s.thresholds.tau_hi},
                        {"prompts_created", s.prompts_created},
                        {"prompts_resolved", s.prompts_resolved},
                        {"prompts_expired", s.prompts_expired},
                        {"prompts_pending", s.prompts_pending}}
      .dump();
}

} // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "ctxguard core bindings";

  auto base = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<SyntaxError>(m, "ParseError", base);
  py::register_exception<ReferenceError>(m, "UnknownIdError", base);
  py::register_exception<ValidationError>(m, "ValidationError", base);
  py::register_exception<AmbiguityError>(m, "AmbiguityError", base);
  py::register_exception<ConflictError>(m, "ConflictError", base);
  py::register_exception<TraceError>(m, "TraceError", base);

  // text
  m.def("split_identifier", &split_identifier, py::arg("s"));
  m.def("porter_stem", [](const std::string &t) { return porter_stem(t); },
        py::arg("token"));
  m.def("text_tokens",
        [](const std::string &t) { return text_tokens(t, Stopwords::english()); },
        py::arg("text"));
  m.def("hash_token",
        [](const std::string &set, const std::string &tok) {
          return hash_token(feature_set(set), tok);
        },
        py::arg("feature_set"), py::arg("token"));
  m.def("hoeffding_bound", &hoeffding_bound, py::arg("range"), py::arg("delta"),
        py::arg("n"));

  // static analysis and rendering
  m.def("analyze",
        [](const std::string &apkg) {
          AppPackage p = parse_package(apkg);
          return from_json(serialize_bindings(
              p.package_id, extract_bindings(p, default_sensitive_api_map())));
        },
        py::arg("apkg_text"), "Context bindings of a package (.apkg text).");
  m.def("render",
        [](const std::string &apkg, const std::string &activity) {
          return from_json(serialize_snapshot(render_window(parse_package(apkg), activity)));
        },
        py::arg("apkg_text"), py::arg("activity"));

  // corpus and evaluation
  m.def("generate_corpus",
        [](std::uint64_t seed, std::size_t apps, std::optional<std::string> out) {
          Corpus c = generate_corpus(seed, apps);
          if (out)
            write_corpus(c, *out);
          py::dict counts;
          for (const auto &i : c.instances) {
            py::str k(std::string(to_string(i.label)));
            counts[k] = counts.contains(k) ? counts[k].cast<int>() + 1 : 1;
          }
          return counts;
        },
        py::arg("seed") = 1, py::arg("apps") = 200, py::arg("out") = py::none(),
        "Generates (and optionally writes) a corpus; returns label counts.");
  m.def("cross_validate",
        [](const std::string &algo, std::size_t k, std::uint64_t harness_seed,
           bool group, const std::string &features, std::optional<std::string> corpus,
           std::uint64_t seed, std::size_t apps) {
          auto data = build_dataset(load_corpus(corpus, seed, apps));
          return from_json(cv_to_json(cross_validate(
              data, algo_from_string(algo), cv_options(k, harness_seed, group, features))));
        },
        py::arg("algo") = "LR", py::arg("k") = 5, py::arg("harness_seed") = 1,
        py::arg("group") = true, py::arg("features") = "all",
        py::arg("corpus") = py::none(), py::arg("seed") = 1, py::arg("apps") = 200);
  m.def("ablate",
        [](const std::string &algo, bool when_subset, std::optional<std::string> corpus,
           std::uint64_t seed, std::size_t apps) {
          auto data = build_dataset(load_corpus(corpus, seed, apps));
          if (when_subset)
            data = when_violation_subset(data);
          return from_json(ablation_to_json(
              ablate(data, algo_from_string(algo), EnabledSets::all_subsets())));
        },
        py::arg("algo") = "LR", py::arg("when_subset") = false,
        py::arg("corpus") = py::none(), py::arg("seed") = 1, py::arg("apps") = 200);
  m.def("personalize",
        [](std::size_t profiles, double noise, std::size_t decisions,
           std::optional<std::string> corpus, std::uint64_t seed, std::size_t apps) {
          PersonalizationOptions o;
          o.decisions_per_user = decisions;
          Corpus c = load_corpus(corpus, seed, apps);
          return from_json(personalization_to_json(
              personalize_eval(c, generate_profiles(seed, profiles, noise), o)));
        },
        py::arg("profiles") = 24, py::arg("noise") = 0.0, py::arg("decisions") = 50,
        py::arg("corpus") = py::none(), py::arg("seed") = 1, py::arg("apps") = 200);
  m.def("train_models",
        [](const std::string &algo, std::optional<std::string> corpus,
           std::uint64_t seed, std::size_t apps) {
          auto models = train_models(build_dataset(load_corpus(corpus, seed, apps)),
                                     algo_from_string(algo));
          std::map<std::string, std::string> out;
          for (const auto &[p, model] : models)
            out.emplace(std::string(to_string(p)), serialize_model(model));
          return out;
        },
        py::arg("algo") = "LR", py::arg("corpus") = py::none(), py::arg("seed") = 1,
        py::arg("apps") = 200, "Per-permission model files, keyed by permission.");

  // runtime
  py::class_<Mediator>(m, "Mediator")
      .def(py::init([](double tau_lo, double tau_hi, const std::string &background,
                       std::optional<std::int64_t> prompt_timeout_ms,
                       const std::string &algo) {
             MediatorConfig c;
             c.thresholds = {tau_lo, tau_hi};
             c.background = background_policy_from_string(background);
             c.prompt_timeout_ms = prompt_timeout_ms;
             c.default_algo = algo_from_string(algo);
             return std::make_unique<Mediator>(c);
           }),
           py::arg("tau_lo") = 0.2, py::arg("tau_hi") = 0.8,
           py::arg("background") = "prompt", py::arg("prompt_timeout_ms") = 30000,
           py::arg("algo") = "LR")
      .def("install", [](Mediator &self, const std::string &apkg) {
             self.install(parse_package(apkg));
           }, py::arg("apkg_text"))
      .def("load_model", [](Mediator &self, const std::string &text) {
             self.set_model(parse_model(text));
           }, py::arg("model_text"))
      .def("model_text", [](Mediator &self, const std::string &perm) {
             return serialize_model(self.model(permission_from_string(perm)));
           }, py::arg("permission"))
      .def("run_trace", [](Mediator &self, const std::string &text) {
             return self.run_trace(parse_trace(text));
           }, py::arg("trace_text"), "Replays a JSON-lines trace; returns request ids.")
      .def("records", [](const Mediator &self) {
             py::list out;
             for (const auto &r : self.records())
               out.append(from_json(serialize_record(r)));
             return out;
           })
      .def("record", [](const Mediator &self, const std::string &id) {
             const RequestRecord *r = self.find_record(id);
             if (!r)
               throw ReferenceError("unknown request", id);
             return from_json(serialize_record(*r));
           }, py::arg("request_id"))
      .def("pending", [](const Mediator &self) {
             py::list out;
             for (const auto &t : self.pending())
               out.append(from_json(serialize_ticket(t)));
             return out;
           })
      .def("resolve", [](Mediator &self, const std::string &ticket, bool allow) {
             return from_json(serialize_record(self.resolve_prompt(ticket, allow)));
           }, py::arg("ticket_id"), py::arg("allow"))
      .def("override_denial", [](Mediator &self, const std::string &id) {
             return from_json(serialize_record(self.override_denial(id)));
           }, py::arg("request_id"))
      .def("expire_due", &Mediator::expire_due, py::arg("now"))
      .def("stats", [](const Mediator &self) { return from_json(stats_json(self)); })
      .def_property_readonly("now", &Mediator::now);

  py::class_<Gateway>(m, "Gateway")
      .def(py::init<Mediator &>(), py::arg("mediator"), py::keep_alive<1, 2>())
      .def("handle",
           [](Gateway &self, const std::string &method, const std::string &path,
              const std::string &body, const std::map<std::string, std::string> &query) {
             HttpResponse r = self.handle(method, path, body, query);
             return py::make_tuple(r.status, from_json(r.body));
           },
           py::arg("method"), py::arg("path"), py::arg("body") = "",
           py::arg("query") = std::map<std::string, std::string>{},
           "Dispatches one request; returns (status, document).")
      .def("serve_background", &Gateway::serve_background,
           py::arg("host") = "127.0.0.1", py::call_guard<py::gil_scoped_release>())
      .def("stop", &Gateway::stop, py::call_guard<py::gil_scoped_release>());
}
