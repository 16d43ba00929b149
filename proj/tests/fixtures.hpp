#pragma once

#include <string>
#include <vector>

#include "editorch/scene.hpp"

namespace editorch::fixtures {

inline Element object(std::string id, std::string label, std::string color, Rect r, int layer = 1) {
  return Element{std::move(id), ElementKind::Object, r, layer, {{"label", std::move(label)}, {"color", std::move(color)}}};
}

inline Element text(std::string id, std::string content, Rect r, std::string color = "black", std::string font = "sans",
                    int layer = 0) {
  return Element{std::move(id), ElementKind::Text, r, layer,
                 {{"content", std::move(content)}, {"color", std::move(color)}, {"font", std::move(font)}}};
}

inline Element decoration(std::string id, std::string motif, Rect r, std::string color = "gold", int layer = 3) {
  return Element{std::move(id), ElementKind::Decoration, r, layer, {{"motif", std::move(motif)}, {"color", std::move(color)}}};
}

inline SceneDoc scene(std::vector<Element> elements, std::string color = "white", std::string motif = "plain") {
  SceneDoc d;
  d.background = {std::move(color), std::move(motif)};
  d.elements = std::move(elements);
  return d;
}

// Three objects and two texts, well separated.
inline SceneDoc five_element_scene() {
  return scene({object("e1", "burger", "red", {100, 100, 400, 400}),
                object("e2", "lamp", "blue", {600, 100, 800, 300}),
                object("e3", "cup", "green", {600, 600, 700, 700}, 2),
                text("e4", "sale", {100, 800, 400, 900}),
                text("e5", "summer", {600, 850, 900, 950})});
}

}  // namespace editorch::fixtures
