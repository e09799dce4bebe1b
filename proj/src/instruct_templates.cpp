// SPDX-License-Identifier: Apache-2.0
// Prompt text for the instruction-data generators. These strings are data:
// golden tests pin them byte for byte.
#include <stdexcept>

#include "vidlm/dataset.hpp"

namespace vidlm {

namespace {

constexpr std::string_view kDetailSystem =
    "You are an intelligent assistant that can understand video information through text descriptions. "
    "You can understand the overall content of the video from the title of the video, the caption of the video. "
    "Please describe the video you saw through the information given above. "
    "Don't mention the title in your description. Don't copy the original caption. "
    "Do not separately describe which objects are included in the video. "
    "It is necessary to integrate object information into your description through adjectives or attributive "
    "clauses. This description should be between 150 and 200 words.";

constexpr std::string_view kConversationSystem =
    "The task is to generate a conversation between two people. One person is watching at a video, "
    "and the other person is asking questions about the video. What they see will be provided below with some "
    "sentences. Include at least one complex question that requires reasoning and thinking. "
    "Only include the questions with certain answers that one can answer with the provided sentences. "
    "Make the QA sound like they are seeing the video. Do not use any words that may sound like looking at text "
    "instead of images, like \"specify\", \"mention\", \"description\", \"text\", \"provided information\", "
    "\"sentence\", \"caption\", etc. Use words like \"see\", \"look\", \"view\", \"show\", etc. "
    "Format each QA pair in a single line as a JSON dictionary. Do not include any other explanation.";

constexpr std::string_view kComplexReasoningSystem =
    "You are an AI visual assistant that can analyze a single video. You receive a title of this video and a "
    "caption of this video, each describing the same video you are observing. The task is to use the provided "
    "title and caption, create a plausible question about the video, and provide the answer in detail.Create "
    "complex questions beyond describing the scene.To answer such questions, one should require first "
    "understanding the visual content, then based on background knowledge or reasoning, either explain why "
    "things are happening that way, or provide guides and help to user's request. Make the question challenging "
    "by not including the visual content details in the question so that the user needs to reason about that "
    "first. When using the information from the caption, directly explain the scene, and do not mention that the "
    "information source is the caption. Always answer as if you are directly looking at the video.";

constexpr std::string_view kDetailExemplarUser =
    "[title] Guy Scratches Head After Landing Perfect Bowling Strike [Caption] This guy scratched his head in "
    "confusion after making a mind-blowing attempt at bowling. He swung his hand to release the ball but "
    "accidentally tossed it towards the gutter. However, it spun and turned at the side edges of the lane and "
    "then struck all pins in one go.";

constexpr std::string_view kDetailExemplarAssistant =
    "In the video, we see a man wearing a maroon shirt and shorts standing in a bowling alley, holding a bowling "
    "ball. First, he swings his hand to release the ball but accidentally tosses it towards the gutter. Next, the "
    "ball spins and turns at the side edges of the lane, seemingly heading towards the gutter, but suddenly "
    "changes direction and heads towards the pins.";

constexpr std::string_view kReasoningExemplarUser =
    "[title] Woman Pranks Sister by Covering Inside of Her Whole House in Aluminium Foil [Caption] This woman had "
    "gone on a vacation. However, she was shocked when she entered her house on returning. Her sister had covered "
    "her whole house with aluminum foil from inside to prank her. She laughed uncontrollably as she saw "
    "everything covered in the foil.";

constexpr std::string_view kReasoningExemplarAssistant =
    "{\n"
    "\"question\": \"Given the sister's initial reaction of uncontrollable laughter upon discovering the prank, "
    "how might this prank affect their relationship in the long run, considering psychological and social "
    "aspects?\",\n"
    "\"answer\": \"From a psychological perspective, humor plays a significant role in maintaining healthy "
    "relationships. The sister's reaction of laughter suggests that she found the prank amusing, which could "
    "enhance their bond. Shared laughter can increase feelings of intimacy and social cohesion, indicating that "
    "the prank may have strengthened their relationship.\"\n"
    "}";

}  // namespace

std::string_view instruct_system_template(InstructKind kind) {
  switch (kind) {
    case InstructKind::detail_description: return kDetailSystem;
    case InstructKind::conversation: return kConversationSystem;
    case InstructKind::complex_reasoning: return kComplexReasoningSystem;
  }
  throw std::invalid_argument("unknown instruction kind");
}

std::vector<Exemplar> instruct_exemplars(InstructKind kind) {
  switch (kind) {
    case InstructKind::detail_description:
      return {{std::string(kDetailExemplarUser), std::string(kDetailExemplarAssistant)}};
    case InstructKind::conversation: return {};
    case InstructKind::complex_reasoning:
      return {{std::string(kReasoningExemplarUser), std::string(kReasoningExemplarAssistant)}};
  }
  throw std::invalid_argument("unknown instruction kind");
}

}  // namespace vidlm
