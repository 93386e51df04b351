public void generic(String raw) {
    List<String> names = split(raw, ",");
    Map<String, Integer> seen = new HashMap<>();
    xstream.fromXML(render(names));
}
