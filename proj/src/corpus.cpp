#include "ctxguard/corpus.hpp"

#include "ctxguard/errors.hpp"
#include "ctxguard/renderer.hpp"
#include "json_util.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

namespace ctxguard {

using nlohmann::json;

namespace {

// ------------------------------------------------------------ page themes

struct Theme {
  std::string name;
  std::string activity;
  std::vector<std::string> titles;
  std::vector<std::string> bodies;
  std::vector<std::string> hints; // EditText hints; empty means no field
  std::string button_id;
  std::vector<std::string> button_texts;
  std::string event = "onClick";
  std::string button_class = "android.widget.Button";
  std::string helper;
};

const std::vector<Theme> &themes() {
  static const std::vector<Theme> t = {
      // SEND_SMS
      {"sms_compose", "ComposeActivity",
       {"New message", "Compose", "Write message"},
       {"Type a message", "Message", "Conversation"},
       {"To", "Recipient"}, "send_button",
       {"Send", "Send message", "Send SMS"}, "onClick",
       "android.widget.Button", "sendMessage"},
      {"sms_invite", "InviteActivity",
       {"Invite friends", "Tell a friend"},
       {"Share the app by text message", "Invite your contacts"},
       {"Phone number"}, "invite_button",
       {"Send invite", "Invite by SMS", "Text invitation"}, "onClick",
       "android.widget.Button", "sendInvite"},
      // RECORD_AUDIO
      {"voice_recorder", "RecorderActivity",
       {"Voice recorder", "Voice memo", "Audio notes"},
       {"Tap to record", "Recordings", "Saved clips"},
       {}, "record_button",
       {"Record", "Start recording", "Rec"}, "onClick",
       "android.widget.ImageButton", "startCapture"},
      {"walkie_talkie", "WalkieTalkieActivity",
       {"Walkie talkie", "Push to talk", "Channel 5"},
       {"Press & Hold to talk", "Hold the button and speak"},
       {}, "talk_button",
       {"Press & Hold", "Hold to talk", "Talk"}, "onTouch",
       "android.widget.ImageButton", "beginTransmit"},
      // LOCATION
      {"nearby_map", "MapActivity",
       {"Nearby places", "Map", "Restaurants near me"},
       {"Find places around you", "Show my location on the map"},
       {"Search here"}, "locate_button",
       {"My location", "Locate me", "Find nearby"}, "onClick",
       "android.widget.ImageButton", "centerOnUser"},
      {"weather_local", "WeatherActivity",
       {"Weather", "Local forecast", "Today"},
       {"Forecast for your current location", "Temperature and rain"},
       {}, "refresh_button",
       {"Use my location", "Local weather", "Update forecast"}, "onClick",
       "android.widget.Button", "refreshForecast"},
      // CAMERA
      {"camera_capture", "CameraActivity",
       {"Camera", "Photo", "Take a picture"},
       {"Point and shoot", "Photo gallery"},
       {}, "shutter_button",
       {"Take photo", "Capture", "Shutter"}, "onClick",
       "android.widget.ImageButton", "capturePhoto"},
      {"qr_scanner", "ScannerActivity",
       {"QR scanner", "Barcode scanner", "Scan code"},
       {"Point the camera at a code", "Scan to open link"},
       {}, "scan_button",
       {"Scan", "Start scanning", "Scan QR code"}, "onClick",
       "android.widget.Button", "startScan"},
      // BLUETOOTH
      {"bt_pairing", "DevicesActivity",
       {"Bluetooth devices", "Pair device", "Connections"},
       {"Available devices nearby", "Put your headset in pairing mode"},
       {}, "pair_button",
       {"Scan for devices", "Pair", "Search devices"}, "onClick",
       "android.widget.Button", "discoverDevices"},
      {"band_sync", "SyncActivity",
       {"Fitness band", "Sync tracker"},
       {"Connect your band over bluetooth", "Steps and heart rate"},
       {}, "sync_button",
       {"Sync now", "Connect band"}, "onClick",
       "android.widget.Button", "connectBand"},
      // NFC
      {"nfc_payment", "PayActivity",
       {"Tap to pay", "Wallet", "Contactless payment"},
       {"Hold your phone near the terminal", "Card ending 4242"},
       {}, "pay_button",
       {"Pay now", "Tap to pay", "Pay with phone"}, "onClick",
       "android.widget.Button", "startPayment"},
      {"nfc_tag", "TagReaderActivity",
       {"NFC tag reader", "Read tag", "Tags"},
       {"Hold a tag to the back of the phone", "Tag contents"},
       {}, "read_button",
       {"Read tag", "Scan tag", "Start reading"}, "onClick",
       "android.widget.Button", "readTag"},
      // DEVICE_ID
      {"device_register", "RegisterActivity",
       {"Register device", "Activate license", "Device registration"},
       {"Link this phone to your account", "License key"},
       {"Email", "Account"}, "register_button",
       {"Register", "Activate", "Register this device"}, "onClick",
       "android.widget.Button", "registerDevice"},
      {"support_ticket", "SupportActivity",
       {"Contact support", "Help desk", "Report a problem"},
       {"Include device information in the report", "Describe the issue"},
       {"Describe the issue"}, "report_button",
       {"Send report", "Attach device info", "Submit ticket"}, "onClick",
       "android.widget.Button", "submitReport"},
      // pages unrelated to any permission
      {"flashlight", "FlashlightActivity",
       {"Flashlight", "Torch", "Bright light"},
       {"Tap to toggle the light", "Brightness"},
       {}, "light_button",
       {"Turn on", "Light", "Toggle torch"}, "onClick",
       "android.widget.ToggleButton", "toggleLight"},
      {"calculator", "CalculatorActivity",
       {"Calculator", "Calc"},
       {"History", "Memory"},
       {"Enter value"}, "equals_button",
       {"Calculate", "Equals", "Result"}, "onClick",
       "android.widget.Button", "evaluate"},
      {"wallpaper", "WallpaperActivity",
       {"Wallpapers", "HD backgrounds"},
       {"Choose a wallpaper", "Popular this week"},
       {}, "apply_button",
       {"Apply", "Set wallpaper", "Download"}, "onClick",
       "android.widget.Button", "applyWallpaper"},
      {"puzzle_game", "GameActivity",
       {"Puzzle", "Level 3", "Block game"},
       {"Score", "Match three tiles"},
       {}, "play_button",
       {"Play", "Next level", "Start game"}, "onClick",
       "android.widget.Button", "nextLevel"},
      {"unit_converter", "ConverterActivity",
       {"Unit converter", "Convert"},
       {"Kilometers to miles", "Currency rates"},
       {"Amount"}, "convert_button",
       {"Convert", "Swap units"}, "onClick",
       "android.widget.Button", "convertUnits"},
      {"notes", "NotesActivity",
       {"Notes", "My notes"},
       {"Write something", "Shopping list"},
       {"Title"}, "save_button",
       {"Save", "Save note", "Done"}, "onClick",
       "android.widget.Button", "saveNote"},
      // user-dependent location pages
      {"camera_geotag", "GeoCameraActivity",
       {"Camera", "Photo"},
       {"Add location to photos", "Geotag"},
       {}, "shutter_button",
       {"Take photo", "Capture"}, "onClick",
       "android.widget.ImageButton", "tagPhoto"},
      {"review_upload", "ReviewActivity",
       {"Write a review", "Rate this product"},
       {"Your rating", "Tell others what you think"},
       {"Your review"}, "upload_button",
       {"Upload", "Post review", "Submit"}, "onClick",
       "android.widget.Button", "uploadReview"},
      {"shopping", "ShopActivity",
       {"Shop", "Today's deals"},
       {"Offers from stores", "Cart"},
       {}, "offers_button",
       {"Show offers", "Find deals"}, "onClick",
       "android.widget.Button", "loadOffers"},
      {"news", "NewsActivity",
       {"Top stories", "Headlines"},
       {"Breaking news", "Sports"},
       {}, "local_button",
       {"Local news", "Refresh"}, "onClick",
       "android.widget.Button", "loadStories"},
      {"assistant", "AssistantActivity",
       {"Assistant", "How can I help?"},
       {"Ask me anything", "Suggestions"},
       {"Type a question"}, "ask_button",
       {"Ask", "Speak"}, "onClick",
       "android.widget.Button", "answerQuery"},
  };
  return t;
}

const Theme &find_theme(std::string_view name) {
  for (const auto &t : themes())
    if (t.name == name)
      return t;
  throw ReferenceError("unknown page theme", std::string(name));
}

const std::vector<std::string> kUnrelatedThemes = {
    "flashlight", "calculator", "wallpaper", "puzzle_game", "unit_converter",
    "notes"};

const std::vector<std::string> kAdTexts = {
    "Sponsored", "Install now", "Special offer", "Play free games",
    "Download our partner app"};

struct Filler {
  std::string id;
  std::string cls;
  std::vector<std::string> texts;
  Rect bounds;
};

const std::vector<Filler> kFillers = {
    {"menu_button", "android.widget.ImageButton", {"Menu", "More"},
     {20, 20, 200, 120}},
    {"settings_button", "android.widget.ImageButton", {"Settings", "Options"},
     {880, 20, 1060, 120}},
    {"back_button", "android.widget.Button", {"Back", "Cancel"},
     {20, 1600, 260, 1700}},
    {"help_button", "android.widget.Button", {"Help", "About"},
     {820, 1600, 1060, 1700}},
};

// ------------------------------------------------------------ API signatures

const std::map<PermissionType, std::vector<std::string>> &api_pool() {
  static const std::map<PermissionType, std::vector<std::string>> m = {
      {PermissionType::DEVICE_ID,
       {"android.telephony.TelephonyManager.getDeviceId()",
        "android.telephony.TelephonyManager.getImei()"}},
      {PermissionType::LOCATION,
       {"android.location.LocationManager.getLastKnownLocation(java.lang.String)",
        "android.location.LocationManager.requestLocationUpdates(java.lang."
        "String,long,float,android.location.LocationListener)"}},
      {PermissionType::CAMERA,
       {"android.hardware.Camera.open(int)",
        "android.hardware.camera2.CameraManager.openCamera(java.lang.String,"
        "android.hardware.camera2.CameraDevice$StateCallback,android.os."
        "Handler)"}},
      {PermissionType::RECORD_AUDIO,
       {"android.media.AudioRecord.startRecording()",
        "android.media.MediaRecorder.setAudioSource(int)"}},
      {PermissionType::BLUETOOTH,
       {"android.bluetooth.BluetoothAdapter.startDiscovery()",
        "android.bluetooth.BluetoothAdapter.enable()"}},
      {PermissionType::NFC,
       {"android.nfc.NfcAdapter.enableForegroundDispatch(android.app.Activity,"
        "android.app.PendingIntent,android.content.IntentFilter[],java.lang."
        "String[][])",
        "android.nfc.tech.IsoDep.transceive(byte[])"}},
      {PermissionType::SEND_SMS,
       {"android.telephony.SmsManager.sendTextMessage(java.lang.String,java."
        "lang.String,java.lang.String,android.app.PendingIntent,android.app."
        "PendingIntent)",
        "android.telephony.SmsManager.sendMultipartTextMessage(java.lang."
        "String,java.lang.String,java.util.ArrayList,java.util.ArrayList,java."
        "util.ArrayList)"}},
  };
  return m;
}

std::vector<std::string> listener_params(const std::string &event) {
  if (event == "onTouch")
    return {"android.view.View", "android.view.MotionEvent"};
  return {"android.view.View"};
}

// ------------------------------------------------------------ templates

std::vector<ScenarioTemplate> build_templates() {
  using P = PermissionType;
  struct Legit {
    P perm;
    std::vector<std::string> themes;
  };
  const std::vector<Legit> legit = {
      {P::SEND_SMS, {"sms_compose", "sms_invite"}},
      {P::RECORD_AUDIO, {"voice_recorder", "walkie_talkie"}},
      {P::LOCATION, {"nearby_map", "weather_local"}},
      {P::CAMERA, {"camera_capture", "qr_scanner"}},
      {P::BLUETOOTH, {"bt_pairing", "band_sync"}},
      {P::NFC, {"nfc_payment", "nfc_tag"}},
      {P::DEVICE_ID, {"device_register", "support_ticket"}},
  };
  std::vector<ScenarioTemplate> out;
  auto add = [&](std::string name, P perm, InstanceLabel label, Violation v,
                 EntrySchema e, std::vector<std::string> th) {
    out.push_back({std::move(name), perm, label, v, e, std::move(th)});
  };
  for (const auto &l : legit)
    for (const auto &th : l.themes)
      add(th, l.perm, InstanceLabel::Legal, Violation::None,
          EntrySchema::Listener, {th});

  // who: an ad banner on an otherwise legitimate page triggers the call
  const std::map<P, std::string> who_names = {
      {P::SEND_SMS, "sms_ad_banner"},      {P::RECORD_AUDIO, "recorder_ad_banner"},
      {P::LOCATION, "weather_ad_location"}, {P::CAMERA, "camera_ad_banner"},
      {P::BLUETOOTH, "bt_ad_banner"},      {P::NFC, "nfc_ad_banner"},
      {P::DEVICE_ID, "register_ad_banner"}};
  for (const auto &l : legit) {
    auto th = l.perm == P::LOCATION ? std::vector<std::string>{"weather_local"}
                                    : l.themes;
    add(who_names.at(l.perm), l.perm, InstanceLabel::Illegal, Violation::Who,
        EntrySchema::Listener, th);
  }

  // what: the page has nothing to do with the resource
  for (const auto &l : legit) {
    std::string n(to_string(l.perm));
    std::transform(n.begin(), n.end(), n.begin(), ::tolower);
    if (l.perm == P::SEND_SMS) {
      add("flashlight_sms", l.perm, InstanceLabel::Illegal, Violation::What,
          EntrySchema::Listener, {"flashlight"});
      std::vector<std::string> rest(kUnrelatedThemes.begin() + 1,
                                    kUnrelatedThemes.end());
      add("unrelated_page_" + n, l.perm, InstanceLabel::Illegal,
          Violation::What, EntrySchema::Listener, rest);
    } else {
      add("unrelated_page_" + n, l.perm, InstanceLabel::Illegal,
          Violation::What, EntrySchema::Listener, kUnrelatedThemes);
    }
  }

  // when: the call fires before the user asks for it
  for (const auto &l : legit) {
    std::string n(to_string(l.perm));
    std::transform(n.begin(), n.end(), n.begin(), ::tolower);
    add("on_create_" + n, l.perm, InstanceLabel::Illegal, Violation::When,
        EntrySchema::Lifecycle, l.themes);
    if (l.perm == P::RECORD_AUDIO)
      add("walkie_talkie_premature", l.perm, InstanceLabel::Illegal,
          Violation::When, EntrySchema::Dual, {"walkie_talkie"});
    else
      add("premature_dual_" + n, l.perm, InstanceLabel::Illegal,
          Violation::When, EntrySchema::Dual, l.themes);
  }

  for (const auto &th : {"camera_geotag", "review_upload", "shopping", "news",
                         "assistant"})
    add(th, P::LOCATION, InstanceLabel::UserDependent, Violation::None,
        EntrySchema::Listener, {th});
  return out;
}

// ------------------------------------------------------------ app builder

class AppBuilder {
public:
  AppBuilder(std::string package_id, Rng rng) : rng_(std::move(rng)) {
    pkg_.package_id = std::move(package_id);
  }

  /// Adds one page carrying the instance's sensitive call.
  void add_instance(const ScenarioTemplate &t, LabeledInstance &inst,
                    Trace &trace) {
    const std::size_t k = next_++;
    const Theme &theme = find_theme(rng_.pick(t.themes));
    const std::string sfx = "_s" + std::to_string(k);
    const std::string cls =
        pkg_.package_id + "." + theme.activity + std::to_string(k);
    const std::string layout_id = "layout" + sfx;

    Component comp;
    comp.component_id = cls;
    comp.kind = ComponentKind::Activity;
    comp.layout_id = layout_id;

    LayoutTemplate layout;
    layout.layout_id = layout_id;
    layout.screen_size = {1080, 1920};
    WidgetDecl root = widget("root" + sfx, "android.widget.FrameLayout",
                             std::nullopt, {0, 0, 1080, 1920});
    const int jx = static_cast<int>(rng_.below(61)) - 30;
    const int jy = static_cast<int>(rng_.below(61)) - 30;
    root.children.push_back(widget("title" + sfx, "android.widget.TextView",
                                   text(rng_.pick(theme.titles), "title" + sfx),
                                   {90 + jx, 130 + jy, 990 + jx, 260 + jy}));
    if (!theme.hints.empty()) {
      auto f = widget("input" + sfx, "android.widget.EditText",
                      text(rng_.pick(theme.hints), "input" + sfx),
                      {90, 400 + jy, 990, 520 + jy});
      f.flags.is_clickable = true;
      root.children.push_back(std::move(f));
    }
    root.children.push_back(widget("body" + sfx, "android.widget.TextView",
                                   text(rng_.pick(theme.bodies), "body" + sfx),
                                   {90 + jx, 700 + jy, 990 + jx, 820 + jy}));

    const std::string button_id = theme.button_id + sfx;
    const bool low = rng_.bernoulli(0.5);
    const Rect button_box = low ? Rect{340 + jx, 1400, 740 + jx, 1560}
                                : Rect{340 + jx, 1000, 740 + jx, 1150};
    auto button = widget(button_id, theme.button_class,
                         text(rng_.pick(theme.button_texts), button_id),
                         button_box);
    button.flags.is_clickable = true;
    button.flags.is_long_clickable = theme.event == "onTouch";
    button.flags.is_checkable =
        theme.button_class == "android.widget.ToggleButton";
    root.children.push_back(std::move(button));

    for (const auto &f : kFillers) {
      if (!rng_.bernoulli(0.4))
        continue;
      auto w = widget(f.id + sfx, f.cls, text(rng_.pick(f.texts), f.id + sfx),
                      f.bounds);
      w.flags.is_clickable = true;
      root.children.push_back(std::move(w));
      bind_listener(comp, cls, f.id + sfx, "onClick", "handle" + f.id);
    }

    const bool who_violation = t.violation == Violation::Who;
    const bool has_ad = who_violation || rng_.bernoulli(0.3);
    const std::string ad_id = "ad_banner" + sfx;
    if (has_ad) {
      auto ad = widget(ad_id, "com.google.android.gms.ads.AdView",
                       rng_.pick(kAdTexts), {0, 1780, 1080, 1920});
      ad.flags.is_clickable = true;
      root.children.push_back(std::move(ad));
    }
    layout.widgets.push_back(std::move(root));

    // call graph for the sensitive path
    const MethodSig api =
        MethodSig::parse(rng_.pick(api_pool().at(t.permission)));
    const MethodSig helper{cls, theme.helper, {}};
    const MethodSig on_create{cls, "onCreate", {"android.os.Bundle"}};
    add_node(on_create);
    add_edge(helper, api);

    std::vector<EntryPointRecord> entries;
    std::optional<std::string> trigger;
    std::optional<MethodSig> listener;
    std::string trigger_event = theme.event;

    if (who_violation) {
      listener = bind_listener(comp, cls, ad_id, "onClick", "");
      trigger_event = "onClick";
      trigger = ad_id;
      bind_listener(comp, cls, button_id, theme.event, "showDetails");
    } else if (t.entry == EntrySchema::Lifecycle) {
      bind_listener(comp, cls, button_id, theme.event, "showDetails");
    } else {
      listener = bind_listener(comp, cls, button_id, theme.event, "");
      trigger = button_id;
    }
    if (has_ad && !who_violation)
      bind_listener(comp, cls, ad_id, "onClick", "openAdLink");
    if (listener) {
      add_edge(*listener, helper);
      entries.push_back(
          {*listener, EntryKind::Listener, listener->method_name, trigger});
    }
    if (t.entry != EntrySchema::Listener) {
      add_edge(on_create, helper);
      entries.push_back({on_create, EntryKind::Lifecycle, std::nullopt,
                         std::nullopt});
    }
    std::sort(entries.begin(), entries.end(), [](const auto &a, const auto &b) {
      return a.entry.str() < b.entry.str();
    });

    ContextBinding b;
    b.site = {helper.str() + "->" + api.str(), api, t.permission, helper};
    b.entries = std::move(entries);
    b.trigger_widget = trigger;
    b.host_activity = cls;
    inst.site_id = b.site.site_id;
    inst.host_activity = cls;
    bindings_.push_back(std::move(b));

    pkg_.declared_permissions.insert(t.permission);
    pkg_.layouts.emplace(layout_id, std::move(layout));
    pkg_.components.push_back(std::move(comp));

    // runtime trace: launch, create, then the call along its path
    auto ev = [&](std::int64_t time, EventKind kind) {
      TraceEvent e;
      e.time = time;
      e.kind = kind;
      e.package = pkg_.package_id;
      e.component = cls;
      return e;
    };
    trace.push_back(ev(0, EventKind::LaunchActivity));
    auto created = ev(5, EventKind::LifecycleCallback);
    created.method = "onCreate";
    trace.push_back(created);
    if (t.entry == EntrySchema::Listener) {
      auto click = ev(1200, EventKind::ListenerInvoke);
      click.component.reset();
      click.widget = trigger;
      click.event = trigger_event;
      trace.push_back(click);
      auto call = ev(1210, EventKind::SensitiveCall);
      call.stack = {*listener, helper, api};
      trace.push_back(call);
    } else {
      auto call = ev(10, EventKind::SensitiveCall);
      call.stack = {on_create, helper, api};
      trace.push_back(call);
    }
    trace.push_back(ev(3000, EventKind::StopComponent));
  }

  AppPackage finish(std::vector<ContextBinding> &bindings) {
    std::sort(bindings_.begin(), bindings_.end(),
              [](const ContextBinding &a, const ContextBinding &b) {
                return std::pair(a.site.containing_method.str(), a.site.api.str()) <
                       std::pair(b.site.containing_method.str(), b.site.api.str());
              });
    bindings = std::move(bindings_);
    return std::move(pkg_);
  }

private:
  WidgetDecl widget(std::string id, std::string cls,
                    std::optional<std::string> txt, Rect bounds) {
    WidgetDecl w;
    w.widget_id = std::move(id);
    w.class_name = std::move(cls);
    w.text = std::move(txt);
    w.bounds = bounds;
    w.owner_package = pkg_.package_id;
    return w;
  }

  /// Literal text or, 40% of the time, a resource reference to it.
  std::optional<std::string> text(const std::string &value,
                                  const std::string &id) {
    if (!rng_.bernoulli(0.4))
      return value;
    const std::string ref = "@string/" + id;
    pkg_.resources[ref] = value;
    return ref;
  }

  /// Binds a fresh anonymous listener class to the widget; if `target` is
  /// non-empty, the listener calls that (non-sensitive) helper.
  MethodSig bind_listener(Component &comp, const std::string &cls,
                          const std::string &widget_id, const std::string &event,
                          const std::string &target) {
    const std::string inner = cls + "$" + std::to_string(++inner_count_);
    comp.classes.push_back(inner);
    MethodSig l{inner, event, listener_params(event)};
    add_node(l);
    pkg_.call_graph.handler_bindings.push_back({widget_id, event, l});
    if (!target.empty())
      add_edge(l, MethodSig{cls, target, {}});
    return l;
  }

  void add_node(const MethodSig &m) { pkg_.call_graph.nodes.insert(m); }
  void add_edge(const MethodSig &a, const MethodSig &b) {
    add_node(a);
    add_node(b);
    pkg_.call_graph.edges.emplace(a, b);
  }

  Rng rng_;
  AppPackage pkg_;
  std::vector<ContextBinding> bindings_;
  std::size_t next_ = 0;
  std::size_t inner_count_ = 0;
};

/// Largest-remainder apportionment of `total` over `weights`.
std::vector<std::size_t> apportion(std::size_t total,
                                   const std::vector<double> &weights) {
  const double sum = std::accumulate(weights.begin(), weights.end(), 0.0);
  std::vector<std::size_t> out(weights.size());
  std::vector<std::pair<double, std::size_t>> rem;
  std::size_t used = 0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    const double exact = total * weights[i] / sum;
    out[i] = static_cast<std::size_t>(std::floor(exact));
    used += out[i];
    rem.emplace_back(exact - out[i], i);
  }
  std::stable_sort(rem.begin(), rem.end(), [](const auto &a, const auto &b) {
    return a.first > b.first;
  });
  for (std::size_t j = 0; used < total; ++j, ++used)
    ++out[rem[j % rem.size()].second];
  return out;
}

std::string pad(std::size_t n, int width) {
  std::string s = std::to_string(n);
  return std::string(width > static_cast<int>(s.size()) ? width - s.size() : 0,
                     '0') +
         s;
}

} // namespace

// ------------------------------------------------------------ public API

std::string_view to_string(InstanceLabel l) {
  switch (l) {
  case InstanceLabel::Legal:
    return "Legal";
  case InstanceLabel::Illegal:
    return "Illegal";
  case InstanceLabel::UserDependent:
    break;
  }
  return "UserDependent";
}

InstanceLabel instance_label_from_string(std::string_view s) {
  for (auto l : {InstanceLabel::Legal, InstanceLabel::Illegal,
                 InstanceLabel::UserDependent})
    if (to_string(l) == s)
      return l;
  throw ValidationError("unknown instance label '" + std::string(s) + "'");
}

std::string_view to_string(Violation v) {
  switch (v) {
  case Violation::None:
    return "none";
  case Violation::Who:
    return "who";
  case Violation::What:
    return "what";
  case Violation::When:
    break;
  }
  return "when";
}

Violation violation_from_string(std::string_view s) {
  for (auto v : {Violation::None, Violation::Who, Violation::What,
                 Violation::When})
    if (to_string(v) == s)
      return v;
  throw ValidationError("unknown violation '" + std::string(s) + "'");
}

std::string_view to_string(EntrySchema e) {
  switch (e) {
  case EntrySchema::Listener:
    return "listener";
  case EntrySchema::Lifecycle:
    return "lifecycle";
  case EntrySchema::Dual:
    break;
  }
  return "dual";
}

const std::vector<ScenarioTemplate> &scenario_templates() {
  static const std::vector<ScenarioTemplate> t = build_templates();
  return t;
}

const ScenarioTemplate &find_template(std::string_view name) {
  for (const auto &t : scenario_templates())
    if (t.name == name)
      return t;
  throw ReferenceError("unknown template", std::string(name));
}

void TemplateMix::validate() const {
  for (double f : {legal, illegal, user_dependent})
    if (!(f >= 0.0))
      throw ValidationError("invalid mix: fractions must be non-negative");
  if (std::abs(legal + illegal + user_dependent - 1.0) > 1e-9)
    throw ValidationError("invalid mix: fractions must sum to 1");
  for (auto p : kAllPermissions)
    if (std::find(permissions.begin(), permissions.end(), p) ==
        permissions.end())
      throw ValidationError("invalid mix: permission " +
                            std::string(to_string(p)) + " is not covered");
}

const AppPackage &Corpus::package(std::string_view id) const {
  for (const auto &p : packages)
    if (p.package_id == id)
      return p;
  throw ReferenceError("unknown package", std::string(id));
}

const ContextBinding &Corpus::binding(const LabeledInstance &inst) const {
  auto it = gold_bindings.find(inst.package_id);
  if (it != gold_bindings.end())
    for (const auto &b : it->second)
      if (b.site.site_id == inst.site_id)
        return b;
  throw ReferenceError("unknown binding", inst.site_id);
}

Corpus generate_corpus(std::uint64_t seed, std::size_t n_apps,
                       const TemplateMix &mix, std::size_t instances_per_app) {
  if (n_apps == 0)
    throw ValidationError("n_apps must be at least 1");
  if (instances_per_app == 0)
    throw ValidationError("instances_per_app must be at least 1");
  mix.validate();

  Rng rng(seed);
  Corpus c;
  c.seed = seed;
  c.n_apps = n_apps;
  c.mix = mix;

  const std::size_t total = n_apps * instances_per_app;
  const auto counts =
      apportion(total, {mix.legal, mix.illegal, mix.user_dependent});

  // Template choice per label: permissions spread evenly, violations evenly
  // over who/what/when, then shuffled.
  std::vector<const ScenarioTemplate *> slots;
  auto templates_for = [](InstanceLabel l, std::optional<PermissionType> p,
                          std::optional<Violation> v) {
    std::vector<const ScenarioTemplate *> out;
    for (const auto &t : scenario_templates())
      if (t.label == l && (!p || t.permission == *p) && (!v || t.violation == *v))
        out.push_back(&t);
    return out;
  };
  const auto &perms = mix.permissions;
  for (std::size_t i = 0; i < counts[0]; ++i)
    slots.push_back(rng.pick(
        templates_for(InstanceLabel::Legal, perms[i % perms.size()], {})));
  const Violation kinds[] = {Violation::Who, Violation::What, Violation::When};
  for (std::size_t i = 0; i < counts[1]; ++i)
    slots.push_back(rng.pick(templates_for(InstanceLabel::Illegal,
                                           perms[i % perms.size()],
                                           kinds[(i / perms.size()) % 3])));
  const auto ud = templates_for(InstanceLabel::UserDependent, {}, {});
  for (std::size_t i = 0; i < counts[2]; ++i)
    slots.push_back(ud[i % ud.size()]);
  rng.shuffle(slots);

  for (std::size_t a = 0; a < n_apps; ++a) {
    const std::string pkg_id = "com.synth.app" + pad(a, 3);
    AppBuilder builder(pkg_id, rng.fork(a));
    for (std::size_t k = 0; k < instances_per_app; ++k) {
      const ScenarioTemplate &t = *slots[a * instances_per_app + k];
      LabeledInstance inst;
      inst.instance_id = pkg_id + "#" + pad(k, 2);
      inst.package_id = pkg_id;
      inst.template_name = t.name;
      inst.permission = t.permission;
      inst.label = t.label;
      inst.violation = t.violation;
      inst.trace_index = c.traces.size();
      Trace trace;
      builder.add_instance(t, inst, trace);
      c.traces.push_back(std::move(trace));
      c.instances.push_back(std::move(inst));
    }
    std::vector<ContextBinding> bindings;
    c.packages.push_back(builder.finish(bindings));
    c.gold_bindings.emplace(pkg_id, std::move(bindings));
  }
  return c;
}

ContextFeatures instance_features(const Corpus &corpus,
                                  const LabeledInstance &inst,
                                  const EnabledSets &enabled) {
  const AppPackage &pkg = corpus.package(inst.package_id);
  const ContextBinding &b = corpus.binding(inst);
  std::optional<WindowSnapshot> snap;
  if (b.host_activity)
    snap = render_window(pkg, *b.host_activity);
  return assemble_features(snap ? &*snap : nullptr, b.entries, b.trigger_widget,
                           enabled);
}

std::vector<UserProfile> generate_profiles(std::uint64_t seed, std::size_t count,
                                           double noise_rate) {
  if (!(noise_rate >= 0.0 && noise_rate <= 1.0))
    throw ValidationError("noise rate must lie in [0, 1]");
  std::vector<std::string> cats;
  for (const auto &t : scenario_templates())
    if (t.label == InstanceLabel::UserDependent)
      cats.push_back(t.name);
  Rng rng(seed);
  std::vector<UserProfile> out;
  for (std::size_t i = 0; i < count; ++i) {
    UserProfile p;
    p.profile_id = "user" + pad(i + 1, 2);
    p.noise_rate = noise_rate;
    for (const auto &c : cats)
      p.preference[c] = rng.bernoulli(0.6) ? 1.0 : 0.0;
    if (i == 0) {
      p.profile_id += "-always-deny";
      for (auto &[_, v] : p.preference)
        v = 0.0;
      p.noise_rate = 0.0;
    } else if (i == 1 && count > 2) {
      p.profile_id += "-near-random";
      for (auto &[_, v] : p.preference)
        v = 0.5;
    }
    out.push_back(std::move(p));
  }
  return out;
}

Label simulate_user(const UserProfile &profile, const LabeledInstance &inst,
                    Rng &rng) {
  if (inst.label != InstanceLabel::UserDependent)
    throw ValidationError("simulate_user needs a user-dependent instance: " +
                          inst.instance_id);
  auto it = profile.preference.find(inst.template_name);
  const double p = it == profile.preference.end() ? 0.5 : it->second;
  bool allow = rng.uniform() < p;
  if (rng.uniform() < profile.noise_rate)
    allow = !allow;
  return allow ? Label::Legal : Label::Illegal;
}

// ------------------------------------------------------------ files

namespace {

std::string file_stem(const std::string &id) {
  std::string s = id;
  std::replace(s.begin(), s.end(), '#', '_');
  return s;
}

void write_file(const std::filesystem::path &p, const std::string &content) {
  std::ofstream out(p, std::ios::binary);
  if (!out)
    throw Error("cannot write " + p.string());
  out << content;
}

std::string read_file(const std::filesystem::path &p) {
  std::ifstream in(p, std::ios::binary);
  if (!in)
    throw Error("cannot read " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

} // namespace

void write_corpus(const Corpus &corpus, const std::filesystem::path &dir) {
  namespace fs = std::filesystem;
  for (const char *sub : {"packages", "bindings", "traces"})
    fs::create_directories(dir / sub);
  for (const auto &p : corpus.packages) {
    write_file(dir / "packages" / (p.package_id + ".apkg"), serialize_package(p));
    write_file(dir / "bindings" / (p.package_id + ".bind"),
               serialize_bindings(p.package_id,
                                  corpus.gold_bindings.at(p.package_id)));
  }
  json insts = json::array();
  for (const auto &i : corpus.instances) {
    const std::string trace_name = file_stem(i.instance_id) + ".trace";
    write_file(dir / "traces" / trace_name,
               serialize_trace(corpus.traces[i.trace_index]));
    insts.push_back({{"instance_id", i.instance_id},
                     {"package_id", i.package_id},
                     {"template", i.template_name},
                     {"permission", std::string(to_string(i.permission))},
                     {"label", std::string(to_string(i.label))},
                     {"violation", std::string(to_string(i.violation))},
                     {"site_id", i.site_id},
                     {"host_activity", i.host_activity},
                     {"trace", "traces/" + trace_name}});
  }
  json perms = json::array();
  for (auto p : corpus.mix.permissions)
    perms.push_back(std::string(to_string(p)));
  json manifest = {{"format", "ctxguard-corpus"},
                   {"version", 1},
                   {"seed", corpus.seed},
                   {"n_apps", corpus.n_apps},
                   {"mix",
                    {{"legal", corpus.mix.legal},
                     {"illegal", corpus.mix.illegal},
                     {"user_dependent", corpus.mix.user_dependent},
                     {"permissions", perms}}},
                   {"instances", std::move(insts)}};
  write_file(dir / "labels.json", manifest.dump(1) + "\n");
}

Corpus read_corpus(const std::filesystem::path &dir) {
  const json m = detail::parse_json(read_file(dir / "labels.json"));
  Corpus c;
  try {
    c.seed = m.at("seed").get<std::uint64_t>();
    c.n_apps = m.at("n_apps").get<std::size_t>();
    const auto &mj = m.at("mix");
    c.mix.legal = mj.at("legal").get<double>();
    c.mix.illegal = mj.at("illegal").get<double>();
    c.mix.user_dependent = mj.at("user_dependent").get<double>();
    c.mix.permissions.clear();
    for (const auto &p : mj.at("permissions"))
      c.mix.permissions.push_back(permission_from_string(p.get<std::string>()));
    std::set<std::string> loaded;
    for (const auto &ij : m.at("instances")) {
      LabeledInstance i;
      i.instance_id = ij.at("instance_id").get<std::string>();
      i.package_id = ij.at("package_id").get<std::string>();
      i.template_name = ij.at("template").get<std::string>();
      i.permission = permission_from_string(ij.at("permission").get<std::string>());
      i.label = instance_label_from_string(ij.at("label").get<std::string>());
      i.violation = violation_from_string(ij.at("violation").get<std::string>());
      i.site_id = ij.at("site_id").get<std::string>();
      i.host_activity = ij.at("host_activity").get<std::string>();
      i.trace_index = c.traces.size();
      c.traces.push_back(parse_trace(read_file(dir / ij.at("trace").get<std::string>())));
      if (loaded.insert(i.package_id).second) {
        c.packages.push_back(parse_package(
            read_file(dir / "packages" / (i.package_id + ".apkg"))));
        c.gold_bindings.emplace(
            i.package_id, parse_bindings(read_file(
                              dir / "bindings" / (i.package_id + ".bind"))));
      }
      c.instances.push_back(std::move(i));
    }
  } catch (const json::exception &e) {
    throw ValidationError(std::string("corpus manifest error: ") + e.what());
  }
  return c;
}

std::string serialize_profiles(const std::vector<UserProfile> &profiles) {
  json a = json::array();
  for (const auto &p : profiles)
    a.push_back({{"profile_id", p.profile_id},
                 {"preference", p.preference},
                 {"noise_rate", p.noise_rate}});
  return a.dump(1) + "\n";
}

} // namespace ctxguard
