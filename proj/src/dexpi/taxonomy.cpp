#include "pidrag/dexpi/taxonomy.hpp"

#include "pidrag/error.hpp"
#include "pidrag/text.hpp"

namespace pidrag::dexpi {

namespace {

struct Row {
    const char* class_name;
    Package package;
    std::vector<std::string> tiers;
};

Taxonomy make_builtin() {
    using P = Package;
    const std::vector<Row> rows = {
        // vessels
        {"Tank", P::equipment, {"vessel"}},
        {"Vessel", P::equipment, {"vessel"}},
        {"PressureVessel", P::equipment, {"vessel"}},
        {"Silo", P::equipment, {"vessel"}},
        {"Column", P::equipment, {"vessel"}},
        {"ProcessColumn", P::equipment, {"vessel"}},
        // pumps and compressors
        {"CentrifugalPump", P::equipment, {"pump"}},
        {"ReciprocatingPump", P::equipment, {"pump"}},
        {"RotaryPump", P::equipment, {"pump"}},
        {"EjectorPump", P::equipment, {"pump"}},
        {"Pump", P::equipment, {"pump"}},
        {"Compressor", P::equipment, {"compressor"}},
        {"CentrifugalCompressor", P::equipment, {"compressor"}},
        {"ReciprocatingCompressor", P::equipment, {"compressor"}},
        {"RotaryCompressor", P::equipment, {"compressor"}},
        {"Fan", P::equipment, {"compressor"}},
        {"Blower", P::equipment, {"compressor"}},
        // heat transfer
        {"PlateHeatExchanger", P::equipment, {"heatExchanger"}},
        {"TubularHeatExchanger", P::equipment, {"heatExchanger"}},
        {"SpiralHeatExchanger", P::equipment, {"heatExchanger"}},
        {"AirCoolingSystem", P::equipment, {"heatExchanger"}},
        {"HeatExchanger", P::equipment, {"heatExchanger"}},
        {"Heater", P::equipment, {"heatExchanger"}},
        {"ElectricHeater", P::equipment, {"heatExchanger"}},
        {"Furnace", P::equipment, {"furnace"}},
        // other process equipment
        {"Agitator", P::equipment, {"mixer"}},
        {"Mixer", P::equipment, {"mixer"}},
        {"StaticMixer", P::equipment, {"mixer"}},
        {"Filter", P::equipment, {"separator"}},
        {"Centrifuge", P::equipment, {"separator"}},
        {"Separator", P::equipment, {"separator"}},
        {"Dryer", P::equipment, {"dryer"}},
        {"Motor", P::equipment, {"driver"}},
        {"ElectricMotor", P::equipment, {"driver"}},
        {"Turbine", P::equipment, {"driver"}},
        // equipment subcomponents
        {"Chamber", P::equipment, {}},
        {"PumpChamber", P::equipment, {}},
        {"Impeller", P::equipment, {}},
        {"Displacer", P::equipment, {}},
        {"TubeBundle", P::equipment, {}},
        {"PlateHeatExchangerPlate", P::equipment, {}},
        {"Nozzle", P::equipment, {}},
        {"Jacket", P::equipment, {}},
        // valves
        {"BallValve", P::piping, {"valve"}},
        {"GlobeValve", P::piping, {"valve"}},
        {"GateValve", P::piping, {"valve"}},
        {"ButterflyValve", P::piping, {"valve"}},
        {"PlugValve", P::piping, {"valve"}},
        {"NeedleValve", P::piping, {"valve"}},
        {"DiaphragmValve", P::piping, {"valve"}},
        {"AngleValve", P::piping, {"valve"}},
        {"AngleGlobeValve", P::piping, {"valve"}},
        {"AngleBallValve", P::piping, {"valve"}},
        {"ThreeWayValve", P::piping, {"valve"}},
        {"ThreeWayGlobeValve", P::piping, {"valve"}},
        {"ThreeWayBallValve", P::piping, {"valve"}},
        {"OperatedValve", P::piping, {"valve"}},
        {"CustomOperatedValve", P::piping, {"valve"}},
        {"CheckValve", P::piping, {"valve", "checkValve"}},
        {"SwingCheckValve", P::piping, {"valve", "checkValve"}},
        {"GlobeCheckValve", P::piping, {"valve", "checkValve"}},
        {"BallCheckValve", P::piping, {"valve", "checkValve"}},
        {"CustomCheckValve", P::piping, {"valve", "checkValve"}},
        {"SafetyValveOrFitting", P::piping, {"valve", "safetyValve"}},
        {"SpringLoadedGlobeSafetyValve", P::piping, {"valve", "safetyValve"}},
        {"SpringLoadedAngleGlobeSafetyValve", P::piping, {"valve", "safetyValve"}},
        {"BreatherValve", P::piping, {"valve", "safetyValve"}},
        {"RuptureDisc", P::piping, {"valve", "safetyValve"}},
        // fittings and line items
        {"PipeTee", P::piping, {"pipeFitting"}},
        {"PipeCoupling", P::piping, {"pipeFitting"}},
        {"PipeReducer", P::piping, {"pipeFitting", "reducer"}},
        {"PipeFitting", P::piping, {"pipeFitting"}},
        {"BlindFlange", P::piping, {"flange"}},
        {"Flange", P::piping, {"flange"}},
        {"FlangedJoint", P::piping, {"flange"}},
        {"Strainer", P::piping, {"pipingComponent"}},
        {"SightGlass", P::piping, {"pipingComponent"}},
        {"Funnel", P::piping, {"pipingComponent"}},
        {"Silencer", P::piping, {"pipingComponent"}},
        {"SteamTrap", P::piping, {"pipingComponent"}},
        {"FlowMeasuringElement", P::piping, {"pipingComponent"}},
        {"Pipe", P::piping, {}},
        {"PipingNode", P::piping, {}},
        {"PropertyBreak", P::piping, {}},
        {"PipingNetworkSystem", P::piping, {}},
        {"PipingNetworkSegment", P::piping, {}},
        {"FlowInPipeOffPageConnector", P::piping, {"pipeOffPageConnector"}},
        {"FlowOutPipeOffPageConnector", P::piping, {"pipeOffPageConnector"}},
        {"PipeOffPageConnector", P::piping, {"pipeOffPageConnector"}},
        // instrumentation
        {"ProcessInstrumentationFunction", P::instrumentation, {"instrumentationFunction"}},
        {"ProcessSignalGeneratingFunction", P::instrumentation, {"instrumentationFunction"}},
        {"ActuatingFunction", P::instrumentation, {"instrumentationFunction"}},
        {"ActuatingElectricalFunction", P::instrumentation, {"instrumentationFunction"}},
        {"InstrumentationLoopFunction", P::instrumentation, {"instrumentationFunction"}},
        {"MeasuringLineFunction", P::instrumentation, {"informationFlow"}},
        {"SignalConveyingFunction", P::instrumentation, {"informationFlow"}},
        {"ActuatingSystem", P::instrumentation, {"actuatingSystem"}},
        {"ControlledActuator", P::instrumentation, {"actuatingSystemComponent"}},
        {"OperatedValveReference", P::instrumentation, {"actuatingSystemComponent"}},
        {"Positioner", P::instrumentation, {"actuatingSystemComponent"}},
        {"PrimaryElement", P::instrumentation, {"sensingLocation"}},
        {"SensingLocation", P::instrumentation, {"sensingLocation"}},
        {"Transmitter", P::instrumentation, {"sensingLocation"}},
    };

    Taxonomy t;
    for (const auto& row : rows) {
        t.add(row.class_name, {row.package, row.tiers});
    }
    return t;
}

} // namespace

const Taxonomy& Taxonomy::builtin() {
    static const Taxonomy instance = make_builtin();
    return instance;
}

Taxonomy Taxonomy::from_json(const nlohmann::json& doc) {
    if (!doc.is_object()) {
        throw ConfigError("taxonomy must be a JSON object keyed by class name");
    }
    Taxonomy t;
    for (const auto& [name, spec] : doc.items()) {
        if (!spec.is_object() || !spec.contains("package") || !spec["package"].is_string()) {
            throw ConfigError("taxonomy entry '" + name + "' needs a string 'package'");
        }
        auto package = package_from_string(spec["package"].get<std::string>());
        if (!package) {
            throw ConfigError("taxonomy entry '" + name + "' has unknown package '" +
                              spec["package"].get<std::string>() + "'");
        }
        Entry entry{*package, {}};
        if (spec.contains("tiers")) {
            for (const auto& tier : spec["tiers"]) {
                entry.tiers.push_back(tier.get<std::string>());
            }
        }
        t.add(name, std::move(entry));
    }
    return t;
}

void Taxonomy::add(const std::string& class_name, Entry entry) {
    entries_[class_name] = std::move(entry);
}

const Taxonomy::Entry* Taxonomy::find(const std::string& class_name) const {
    auto it = entries_.find(class_name);
    return it == entries_.end() ? nullptr : &it->second;
}

std::optional<Package> Taxonomy::package_of(const std::string& class_name) const {
    const auto* entry = find(class_name);
    if (!entry) {
        return std::nullopt;
    }
    return entry->package;
}

std::vector<std::string> Taxonomy::labels(const std::string& class_name, Package fallback) const {
    const auto* entry = find(class_name);
    std::vector<std::string> out;
    out.push_back(to_string(entry ? entry->package : fallback));
    if (entry) {
        out.insert(out.end(), entry->tiers.begin(), entry->tiers.end());
    }
    auto leaf = text::lower_camel(class_name);
    if (leaf.empty()) {
        leaf = "unknown";
    }
    // a class named like its tier ("Pump") would otherwise repeat the label
    if (out.back() != leaf) {
        out.push_back(leaf);
    }
    return out;
}

} // namespace pidrag::dexpi
