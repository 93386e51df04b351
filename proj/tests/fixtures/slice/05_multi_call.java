public void both(String left, String right) {
    String a = fetch(left);
    String b = fetch(right);
    int unrelated = 4;
    Object x = xstream.fromXML(a);
    Object y = xstream.fromXML(b);
    consume(x);
}
