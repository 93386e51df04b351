public Object mixed(String in, String key) {
    String k = lookup(key);
    String v = fetch(in, k);
    String w = v;
    Object o = xstream.fromXML(w);
    return o;
}
