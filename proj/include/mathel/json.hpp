#pragma once

// JSON mappings for the wire and file formats. Serialization uses the
// nlohmann ADL hooks so `json j = value;` works; parsing goes through the
// explicit *_from_json functions, which throw Error(schema_violation).

#include <json.hpp>

#include "mathel/corpus.hpp"
#include "mathel/math_parser.hpp"
#include "mathel/recommender.hpp"
#include "mathel/session.hpp"

namespace mathel {

using Json = nlohmann::json;

void to_json(Json& j, const Qid& qid);
void to_json(Json& j, const Span& span);
void to_json(Json& j, const RawDocument& doc);
void to_json(Json& j, const TokenizerOptions& options);
void to_json(Json& j, const MathSegment& segment);
void to_json(Json& j, const Token& token);
void to_json(Json& j, const TokenizedFormula& formula);
void to_json(Json& j, const Diagnostic& diagnostic);
void to_json(Json& j, const RecommendationCandidate& candidate);
void to_json(Json& j, const RecommendationSet& set);
void to_json(Json& j, const TargetRef& target);
void to_json(Json& j, const AnnotationEvent& event);
void to_json(Json& j, const Annotation& annotation);
void to_json(Json& j, const AnnotationRow& row);
void to_json(Json& j, const Progress& progress);

RawDocument document_from_json(const Json& j);
TokenizerOptions tokenizer_options_from_json(const Json& j);
AnnotationEvent event_from_json(const Json& j);
Annotation annotation_from_json(const Json& j);
AnnotationRow annotation_row_from_json(const Json& j);
std::optional<Qid> optional_qid_from_json(const Json& j);

Json optional_qid_json(const std::optional<Qid>& qid);

}  // namespace mathel
