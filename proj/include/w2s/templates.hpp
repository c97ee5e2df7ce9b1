#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace w2s {

/// Prompt templates use [``name''] slots. Rendering substitutes every slot
/// and rejects unknown or unfilled slot names so a typo cannot silently ship
/// a half-rendered prompt.
struct Template {
    std::string name;
    std::string body;
};

class TemplateSet {
  public:
    /// Built-in template bodies; source of truth for prompt text.
    static TemplateSet builtin();
    /// Load every *.txt under dir as a template named by the file stem.
    /// One trailing newline is stripped (text editors tend to add it).
    static TemplateSet load_dir(const std::filesystem::path& dir);

    const Template& get(const std::string& name) const;
    bool contains(const std::string& name) const { return by_name_.count(name) > 0; }
    std::vector<std::string> names() const;

    /// Substitute slots; throws ConfigError on unknown slot in `values` or
    /// unfilled slot in the body.
    std::string render(const std::string& name,
                       const std::map<std::string, std::string>& values) const;

    void put(Template t);

  private:
    std::map<std::string, Template> by_name_;
};

/// Slot names appearing in a body, in first-appearance order.
std::vector<std::string> template_slots(const std::string& body);

/// Substitute slots in a raw body (same rules as TemplateSet::render).
std::string render_template(const std::string& body,
                            const std::map<std::string, std::string>& values);

/// Write the built-in set to dir, one <name>.txt per template.
void write_builtin_templates(const std::filesystem::path& dir);

}  // namespace w2s
