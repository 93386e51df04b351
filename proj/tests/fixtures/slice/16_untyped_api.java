public Foo body(String payload) {
    String body = unwrap(payload);
    int len = body.length();
    Foo f = mapper.readValue(body, Foo.class);
    return f;
}
