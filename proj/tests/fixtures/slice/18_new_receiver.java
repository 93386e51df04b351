public Map<String, Object> cfg(String s) {
    String text = clean(s);
    Map<String, Object> m = new Yaml().load(text);
    return m;
}
