#include <catch_amalgamated.hpp>

#include <random>

#include "csiact/model_store.hpp"
#include "json.hpp"
#include "support.hpp"

using namespace csiact;
using csiact::testing::error_code_of;
using csiact::testing::gaussian_blobs;
using csiact::testing::read_text;
using csiact::testing::TempDir;
using csiact::testing::write_text;

namespace {

ClassifierSpec quick_spec(ModelKind kind) {
  ClassifierSpec spec;
  spec.kind = kind;
  spec.forest.n_trees = 8;
  spec.forest.max_depth = 6;
  spec.svm.epochs = 10;
  spec.mlp.hidden_size = 6;
  spec.mlp.epochs = 10;
  return spec;
}

ModelEnvelope trained(ModelKind kind, const DesignMatrix& dm) {
  return make_envelope(fit(quick_spec(kind), dm, 17), dm, "2026-01-01T00:00:00Z");
}

}  // namespace

TEST_CASE("save then load predicts identically for every kind") {
  const auto train = gaussian_blobs(30, 4, 0.6, 50);
  std::mt19937_64 rng(51);
  std::normal_distribution<double> wide(0.0, 3.0);
  Matrix queries(300, 4);
  for (double& v : queries.data()) v = wide(rng);

  TempDir dir;
  for (auto kind : kAllModelKinds) {
    INFO(to_string(kind));
    const auto env = trained(kind, train);
    const auto path = dir / (std::string(to_string(kind)) + std::string(kModelExtension));
    save_model(env, path);
    const auto back = load_model(path);
    CHECK(back.kind() == kind);
    CHECK(back.schema() == env.schema());
    CHECK(back.created_at == env.created_at);
    CHECK(back.training_fingerprint == env.training_fingerprint);
    CHECK(back.model.predict(queries) == env.model.predict(queries));
    CHECK(back.model.payload == env.model.payload);
    // A second save of the loaded model reproduces the bytes.
    CHECK(serialize_model(back) == read_text(path));
  }
}

TEST_CASE("equal models serialize to equal bytes apart from created_at") {
  const auto dm = gaussian_blobs(15, 3, 1.0, 52);
  for (auto kind : kAllModelKinds) {
    auto a = trained(kind, dm);
    auto b = make_envelope(fit(quick_spec(kind), dm, 17), dm, "2030-06-30T12:00:00Z");
    CHECK(serialize_model(a) != serialize_model(b));
    b.created_at = a.created_at;
    CHECK(serialize_model(a) == serialize_model(b));
  }
}

TEST_CASE("model files record kind, schema and fingerprint") {
  const auto dm = gaussian_blobs(10, 3, 1.0, 53);
  const auto env = trained(ModelKind::Svm, dm);
  const auto j = nlohmann::json::parse(serialize_model(env));
  CHECK(j["format_version"] == kModelFormatVersion);
  CHECK(j["kind"] == "svm");
  CHECK(j["schema"]["feature_width"] == 3);
  CHECK(j["schema"]["labels"] == std::vector<std::string>{"sitting", "standing"});
  CHECK(j["payload"].contains("scaler"));
  CHECK(j["training_fingerprint"] == sha256_hex(canonical_serialization(dm)));
  CHECK(j["training_fingerprint"].get<std::string>().size() == 64);
}

TEST_CASE("sha256 matches the standard test vectors") {
  CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  CHECK(sha256_hex("") == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
}

TEST_CASE("an ensemble file holds four member payloads") {
  const auto dm = gaussian_blobs(12, 2, 1.0, 54);
  TempDir dir;
  save_model(trained(ModelKind::Ensemble, dm), dir / "e.csimodel");
  const auto j = nlohmann::json::parse(read_text(dir / "e.csimodel"));
  for (auto member : {"forest", "mlp", "knn", "svm"}) CHECK(j["payload"].contains(member));
  const auto back = load_model(dir / "e.csimodel");
  CHECK(std::holds_alternative<EnsembleModel>(back.model.payload));
}

TEST_CASE("storage failures") {
  const auto dm = gaussian_blobs(10, 2, 1.0, 55);
  const auto env = trained(ModelKind::Knn, dm);
  TempDir dir;

  SECTION("a missing directory") {
    CHECK(error_code_of([&] { save_model(env, dir / "missing/m.csimodel"); }) == Errc::IoFailure);
    CHECK(error_code_of([&] { load_model(dir / "absent.csimodel"); }) == Errc::IoFailure);
  }
  SECTION("a truncated file") {
    const auto text = serialize_model(env);
    write_text(dir / "t.csimodel", text.substr(0, text.size() / 2));
    CHECK(error_code_of([&] { load_model(dir / "t.csimodel"); }) == Errc::CorruptModel);
  }
  SECTION("an unknown format version") {
    auto j = nlohmann::json::parse(serialize_model(env));
    j["format_version"] = 999;
    write_text(dir / "v.csimodel", j.dump());
    CHECK(error_code_of([&] { load_model(dir / "v.csimodel"); }) == Errc::VersionMismatch);
  }
  SECTION("inconsistent payloads") {
    auto j = nlohmann::json::parse(serialize_model(env));
    j["schema"]["feature_width"] = 7;
    CHECK(error_code_of([&] { parse_model(j.dump()); }) == Errc::CorruptModel);
    j = nlohmann::json::parse(serialize_model(env));
    j["payload"]["k"] = 0;
    CHECK(error_code_of([&] { parse_model(j.dump()); }) == Errc::CorruptModel);
    j = nlohmann::json::parse(serialize_model(env));
    j["kind"] = "tree";
    CHECK(error_code_of([&] { parse_model(j.dump()); }) == Errc::CorruptModel);
    CHECK(error_code_of([&] { parse_model("[1,2,3]"); }) == Errc::CorruptModel);
  }
}
