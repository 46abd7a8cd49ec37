#include <doctest.h>

#include "../support/test_support.hpp"

using namespace cartoforge;
using namespace cartoforge::style;
using cartoforge::testing::fixture_text;

namespace {

ReviewSuggestion suggestion(std::string element, Category category, std::vector<VariableChange> changes) {
    return ReviewSuggestion{std::move(element), category, std::move(changes), {}};
}

ReviewVerdict revise(std::vector<ReviewSuggestion> suggestions) {
    return ReviewVerdict{Decision::revise, std::move(suggestions), {}};
}

}  // namespace

TEST_SUITE("color") {
    TEST_CASE("normalizes case and three-digit shorthand") {
        CHECK(normalize_color("#FAF3D3") == "#faf3d3");
        CHECK(normalize_color("#AfCdE7") == "#afcde7");
        CHECK(normalize_color("#abc") == "#aabbcc");
        CHECK(Color::parse("#B0C4DE").rgb() == std::array<std::uint8_t, 3>{176, 196, 222});
    }

    TEST_CASE("rejects anything that is not a hex color") {
        for (const char* bad : {"", "#", "faf3d3", "#faf3d", "#faf3d3a", "#ggg000", "red", "#12 345"}) {
            CAPTURE(bad);
            CHECK_ERROR_KIND(Color::parse(bad), ErrorKind::SchemaViolation);
        }
    }

    TEST_CASE("normalization is idempotent") {
        cartoforge::testing::Gen gen(7);
        static const std::string hex = "0123456789abcdefABCDEF";
        for (int i = 0; i < 500; ++i) {
            std::string c = "#";
            const int digits = gen.coin() ? 3 : 6;
            for (int d = 0; d < digits; ++d) c.push_back(hex[gen.integer(0, static_cast<int>(hex.size()) - 1)]);
            const auto once = normalize_color(c);
            CHECK(normalize_color(once) == once);
            CHECK(once.size() == 7);
        }
    }

    TEST_CASE("opacity range is closed on both ends") {
        CHECK(Opacity::of(0.0).value() == 0.0);
        CHECK(Opacity::of(1.0).value() == 1.0);
        CHECK_ERROR_KIND(Opacity::of(1.5), ErrorKind::SchemaViolation);
        CHECK_ERROR_KIND(Opacity::of(-0.01), ErrorKind::SchemaViolation);
        CHECK_ERROR_KIND(Opacity::of(std::nan("")), ErrorKind::SchemaViolation);
    }
}

TEST_SUITE("parse_stylesheet") {
    TEST_CASE("reads the designer's road styles") {
        const auto sheet = parse_stylesheet(fixture_text("reference/sunflowers_lines.json"));
        REQUIRE(sheet.lines.size() == 6);
        const LineStyle* primary = sheet.lines.find("Primary_Road");
        REQUIRE(primary);
        CHECK(primary->line_opacity.value() == 1.0);
        CHECK(primary->line_color.hex() == "#8b0000");
        CHECK(sheet.lines.names() ==
              std::vector<std::string>{"Pedestrian", "Street", "Tertiary_Road", "Secondary_Road", "Primary_Road", "Ferry"});
        CHECK(sheet.fills.empty());
        CHECK(sheet.icons.empty());
    }

    TEST_CASE("the printed excerpt has no background") {
        CHECK_ERROR_KIND(parse_stylesheet(fixture_text("reference/sunflowers_lines_only.json")), ErrorKind::MissingBackground);
    }

    TEST_CASE("minimal background-only document") {
        const auto sheet = parse_stylesheet(
            R"({"reasoning":"r","stylesheet":{"background":{"explanation":"e","background-color":"#000000"}}})");
        CHECK(sheet.reasoning == "r");
        CHECK(sheet.background.background_color.hex() == "#000000");
        CHECK(sheet.background.explanation == "e");
        CHECK(sheet.lines.empty());
        CHECK(sheet.labels.empty());
    }

    TEST_CASE("out-of-range opacity is a schema violation") {
        const std::string doc1 = R"({"stylesheet":{"line":{"Ferry":{"line-opacity":1.5,"line-color":"#000"}},
            "background":{"background-color":"#fff"}}})";
        CHECK_ERROR_KIND(parse_stylesheet(doc1),
                         ErrorKind::SchemaViolation);
    }

    TEST_CASE("malformed and mistyped documents") {
        CHECK_ERROR_KIND(parse_stylesheet("{\"stylesheet\": "), ErrorKind::MalformedJson);
        CHECK_ERROR_KIND(parse_stylesheet("[]"), ErrorKind::SchemaViolation);
        CHECK_ERROR_KIND(parse_stylesheet(R"({"reasoning":"x"})"), ErrorKind::SchemaViolation);
        const std::string doc2 = R"({"stylesheet":{"fill":{"Park":{"fill-opacity":"0.5","fill-color":"#000",
            "fill-outline-color":"#000"}},"background":{"background-color":"#fff"}}})";
        CHECK_ERROR_KIND(parse_stylesheet(doc2),
                         ErrorKind::SchemaViolation);
        const std::string doc3 = R"json({"stylesheet":{"symbol (icon)":{"Tower":{"expectation":""}},
            "background":{"background-color":"#fff"}}})json";
        CHECK_ERROR_KIND(parse_stylesheet(doc3), ErrorKind::SchemaViolation);
        CHECK_ERROR_KIND(parse_stylesheet(R"({"stylesheet":{"background":{"background-color":"blue"}}})"),
                         ErrorKind::SchemaViolation);
    }

    TEST_CASE("unknown keys are errors unless tolerant") {
        const std::string doc = R"({"reasoning":"r","confidence":0.9,"stylesheet":{"background":
            {"background-color":"#fff","background-pattern":"dots"}}})";
        CHECK_ERROR_KIND(parse_stylesheet(doc), ErrorKind::SchemaViolation);

        std::vector<std::string> warnings;
        const auto sheet = parse_stylesheet(doc, {.tolerant = true}, &warnings);
        CHECK(sheet.background.background_color.hex() == "#ffffff");
        REQUIRE(warnings.size() == 2);
        CHECK(warnings[0].find("confidence") != std::string::npos);
        CHECK(warnings[1].find("background-pattern") != std::string::npos);
    }

    TEST_CASE("duplicate manifest names are rejected") {
        CHECK_ERROR_KIND(parse_manifest(R"({"fill":["Park","Park"]})"), ErrorKind::SchemaViolation);
        CHECK_ERROR_KIND(parse_manifest(R"({})"), ErrorKind::SchemaViolation);
        CHECK_ERROR_KIND(parse_manifest(R"({"polygon":["Park"]})"), ErrorKind::SchemaViolation);
    }
}

TEST_SUITE("serialize_stylesheet") {
    TEST_CASE("background-only sheet") {
        StyleSheet sheet;
        sheet.background.background_color = Color::parse("#faf3d3");
        const auto text = serialize_stylesheet(sheet);
        CHECK(text.find("\"background-color\": \"#faf3d3\"") != std::string::npos);
        CHECK(text.find("\"symbol (icon)\"") != std::string::npos);
    }

    TEST_CASE("designer stylesheet round-trips") {
        const auto sheet = parse_stylesheet(fixture_text("reference/sunflowers_lines.json"));
        const auto text = serialize_stylesheet(sheet);
        CHECK(parse_stylesheet(text) == sheet);
        CHECK(text.find("\"line-opacity\": 1.0") != std::string::npos);
        CHECK(text.find("\"line-opacity\": 0.85") != std::string::npos);
    }

    TEST_CASE("fill order follows insertion order") {
        StyleSheet sheet;
        sheet.fills.insert("Water", {"", Opacity::of(0.9), Color::parse("#afcde7"), Color::parse("#87b0d9")});
        sheet.fills.insert("Park", {"", Opacity::of(0.7), Color::parse("#91a76f"), Color::parse("#6b8e23")});
        const auto text = serialize_stylesheet(sheet);
        CHECK(text.find("\"Water\"") < text.find("\"Park\""));
        CHECK(parse_stylesheet(text).fills.names() == std::vector<std::string>{"Water", "Park"});
    }

    TEST_CASE("property: random sheets survive a round-trip and match their manifest") {
        cartoforge::testing::Gen gen(20240601);
        for (int i = 0; i < 200; ++i) {
            const auto manifest = gen.manifest();
            const auto sheet = gen.sheet_for(manifest);
            const auto reparsed = parse_stylesheet(serialize_stylesheet(sheet));
            REQUIRE(reparsed == sheet);
            CHECK(validate_completeness(reparsed, manifest).complete());
            CHECK(manifest_from_json(manifest_to_json(manifest)) == manifest);
        }
    }
}

TEST_SUITE("validate_completeness") {
    TEST_CASE("missing fill is reported") {
        LayerManifest manifest;
        manifest.fill_elements = {"Park", "Water"};
        StyleSheet sheet;
        sheet.fills.insert("Park", {});
        const auto report = validate_completeness(sheet, manifest);
        CHECK_FALSE(report.complete());
        REQUIRE(report.missing.size() == 1);
        CHECK(report.missing[0] == ElementRef{Category::fill, "Water"});
        CHECK(report.extraneous.empty());
    }

    TEST_CASE("complete neighborhood-level sheet") {
        const auto manifest = cartoforge::testing::neighborhood_manifest();
        CHECK(manifest.icon_elements.size() == 2);
        CHECK(manifest.label_elements.size() == 6);
        CHECK(manifest.line_elements.size() == 6);
        CHECK(manifest.fill_elements.size() == 6);
        const auto report = validate_completeness(cartoforge::testing::sunflowers_sheet(), manifest);
        CHECK_MESSAGE(report.complete(), report.describe());
    }

    TEST_CASE("extraneous entry is reported") {
        LayerManifest manifest;
        manifest.fill_elements = {"Water"};
        StyleSheet sheet;
        sheet.fills.insert("Water", {});
        sheet.fills.insert("Canal", {});
        const auto report = validate_completeness(sheet, manifest);
        REQUIRE(report.extraneous.size() == 1);
        CHECK(report.extraneous[0] == ElementRef{Category::fill, "Canal"});
        CHECK(report.describe() == "extraneous=[fill:Canal]");
    }

    TEST_CASE("names match exactly") {
        LayerManifest manifest;
        manifest.line_elements = {"Primary road"};
        StyleSheet sheet;
        sheet.lines.insert("Primary_Road", {});
        const auto report = validate_completeness(sheet, manifest);
        CHECK(report.missing.size() == 1);
        CHECK(report.extraneous.size() == 1);
    }

    TEST_CASE("property: complete iff per-category name sets agree") {
        cartoforge::testing::Gen gen(99);
        for (int i = 0; i < 200; ++i) {
            const auto manifest = gen.manifest();
            auto sheet = gen.sheet_for(manifest);
            const bool perturb = gen.coin();
            if (perturb) {
                if (gen.coin() || manifest.fill_elements.empty()) {
                    sheet.fills.insert("Extra fill " + std::to_string(i), {});
                } else {
                    LayerManifest bigger = manifest;
                    bigger.fill_elements.push_back("Unstyled " + std::to_string(i));
                    CHECK_FALSE(validate_completeness(sheet, bigger).complete());
                    continue;
                }
            }
            CHECK(validate_completeness(sheet, manifest).complete() == !perturb);
        }
    }
}

TEST_SUITE("apply_suggestions") {
    TEST_CASE("background row becomes warm yellow") {
        const auto sheet = cartoforge::testing::sunflowers_sheet();
        const auto out = apply_suggestions(
            sheet, revise({suggestion("background", Category::background,
                                      {{"background-color", Color::parse("#FAF3D3")}})}));
        CHECK(out.background.background_color.hex() == "#faf3d3");
        CHECK(out.background.explanation == sheet.background.explanation);
        CHECK(out.fills == sheet.fills);
    }

    TEST_CASE("accept leaves the sheet unchanged") {
        const auto sheet = cartoforge::testing::sunflowers_sheet();
        CHECK(apply_suggestions(sheet, ReviewVerdict::accept()) == sheet);
    }

    TEST_CASE("water row changes three variables and nothing else") {
        const auto sheet = cartoforge::testing::sunflowers_sheet();
        const auto out = apply_suggestions(
            sheet, revise({suggestion("Water", Category::fill,
                                      {{"fill-color", Color::parse("#AFCDE7")},
                                       {"fill-opacity", Opacity::of(0.9)},
                                       {"fill-outline-color", Color::parse("#87B0D9")}})}));
        const FillStyle* water = out.fills.find("Water");
        REQUIRE(water);
        CHECK(water->fill_color.hex() == "#afcde7");
        CHECK(water->fill_opacity.value() == 0.9);
        CHECK(water->fill_outline_color.hex() == "#87b0d9");
        CHECK(*out.fills.find("Park") == *sheet.fills.find("Park"));
        CHECK(out.lines == sheet.lines);
        CHECK(out.background == sheet.background);
    }

    TEST_CASE("unknown element and illegal variable") {
        const auto sheet = cartoforge::testing::sunflowers_sheet();
        CHECK_ERROR_KIND(apply_suggestions(sheet, revise({suggestion("Canal", Category::fill,
                                                                     {{"fill-color", Color::parse("#000")}})})),
                         ErrorKind::UnknownElement);
        CHECK_ERROR_KIND(apply_suggestions(sheet, revise({suggestion("Ferry", Category::line,
                                                                     {{"fill-color", Color::parse("#000")}})})),
                         ErrorKind::IllegalVariableForCategory);
    }

    TEST_CASE("icon expectation text is replaceable") {
        const auto sheet = cartoforge::testing::sunflowers_sheet();
        const auto out = apply_suggestions(
            sheet, revise({suggestion("Metro station", Category::icon, {{"expectation", std::string("A plain M")}})}));
        CHECK(out.icons.find("Metro station")->expectation == "A plain M");
        CHECK(out.icons.find("Metro station")->explanation == sheet.icons.find("Metro station")->explanation);
    }

    TEST_CASE("property: exactly the named leaves change") {
        cartoforge::testing::Gen gen(4242);
        for (int round = 0; round < 100; ++round) {
            const auto manifest = gen.manifest();
            const auto sheet = gen.sheet_for(manifest);
            // Pick distinct (element, variable) pairs with guaranteed-new values.
            std::vector<ReviewSuggestion> suggestions;
            std::size_t expected_changes = 0;
            for (const auto& [name, fill] : sheet.fills) {
                if (!gen.coin()) continue;
                std::vector<VariableChange> changes;
                if (gen.coin()) {
                    auto rgb = fill.fill_color.rgb();
                    changes.push_back({"fill-color", Color::from_rgb(static_cast<std::uint8_t>(rgb[0] ^ 0x80), rgb[1], rgb[2])});
                }
                if (gen.coin()) {
                    changes.push_back({"fill-opacity", Opacity::of(fill.fill_opacity.value() > 0.5 ? 0.25 : 0.75)});
                }
                if (changes.empty()) continue;
                expected_changes += changes.size();
                suggestions.push_back(suggestion(name, Category::fill, std::move(changes)));
            }
            for (const auto& [name, line] : sheet.lines) {
                if (!gen.coin()) continue;
                auto rgb = line.line_color.rgb();
                suggestions.push_back(suggestion(
                    name, Category::line,
                    {{"line-color", Color::from_rgb(rgb[0], static_cast<std::uint8_t>(rgb[1] ^ 0x40), rgb[2])}}));
                ++expected_changes;
            }
            if (suggestions.empty()) continue;
            const auto out = apply_suggestions(sheet, revise(suggestions));

            std::size_t changed = 0;
            for (const auto& [name, before] : sheet.fills) {
                const FillStyle& after = *out.fills.find(name);
                changed += (after.fill_color != before.fill_color) + (after.fill_opacity != before.fill_opacity) +
                           (after.fill_outline_color != before.fill_outline_color);
                CHECK(after.explanation == before.explanation);
            }
            for (const auto& [name, before] : sheet.lines) {
                const LineStyle& after = *out.lines.find(name);
                changed += (after.line_color != before.line_color) + (after.line_opacity != before.line_opacity);
            }
            CHECK(changed == expected_changes);
            CHECK(out.labels == sheet.labels);
            CHECK(out.icons == sheet.icons);
            CHECK(out.background == sheet.background);
        }
    }
}

TEST_SUITE("review verdict model") {
    TEST_CASE("variables legal per category") {
        CHECK(variable_kind(Category::fill, "fill-outline-color") == VariableKind::color);
        CHECK(variable_kind(Category::line, "line-opacity") == VariableKind::opacity);
        CHECK(variable_kind(Category::icon, "expectation") == VariableKind::text);
        CHECK_FALSE(variable_kind(Category::label, "text-size").has_value());
        CHECK_FALSE(variable_kind(Category::background, "fill-color").has_value());
    }

    TEST_CASE("accept must be bare, revise must suggest") {
        ReviewVerdict bad_accept{Decision::accept, {suggestion("background", Category::background,
                                                                {{"background-color", Color::parse("#fff")}})},
                                 {}};
        CHECK_ERROR_KIND(bad_accept.validate(), ErrorKind::SchemaViolation);
        CHECK_ERROR_KIND(revise({}).validate(), ErrorKind::SchemaViolation);
    }

    TEST_CASE("json form accepts capitalized variable names") {
        const auto verdict = verdict_from_json(parse_json(R"({"decision":"Revise","suggestions":[
            {"element":"Water","category":"fill","changes":{"Fill-color":"#AFCDE7","Fill-opacity":0.9,
             "Fill-outline-color":"#87B0D9"},"explanation":"Tone down the blue."}]})"));
        REQUIRE(verdict.suggestions.size() == 1);
        const auto& changes = verdict.suggestions[0].changes;
        REQUIRE(changes.size() == 3);
        CHECK(changes[0].variable == "fill-color");
        CHECK(std::get<Color>(changes[0].value).hex() == "#afcde7");
        CHECK(std::get<Opacity>(changes[1].value).value() == 0.9);
        CHECK(verdict_from_json(verdict_to_json(verdict)) == verdict);
    }

    TEST_CASE("illegal variable in json") {
        const std::string doc3 = R"({"decision":"Revise","suggestions":[
            {"element":"Ferry","category":"line","changes":{"line-width":3}}]})";
        CHECK_ERROR_KIND(verdict_from_json(parse_json(doc3)),
                         ErrorKind::IllegalVariableForCategory);
        CHECK_ERROR_KIND(verdict_from_json(parse_json(R"({"decision":"Maybe"})")), ErrorKind::SchemaViolation);
    }
}
